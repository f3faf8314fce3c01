//! Entities, goods, offers, states and transactions.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::multiset::Multiset;

fn validate_token(s: &str) -> Result<()> {
    if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c == ',' || c == '"') {
        return Err(Error::InvalidId(s.to_string()));
    }
    Ok(())
}

macro_rules! token_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(id: impl AsRef<str>) -> Result<Self> {
                let id = id.as_ref();
                validate_token(id)?;
                Ok(Self(Arc::from(id)))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                Self::new(s)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }
    };
}

token_id! {
    /// An entity able to give and receive goods. Ordered lexicographically.
    EntityId
}

token_id! {
    /// A good (product, service or favour). Ordered lexicographically.
    GoodId
}

/// A standing offer to give (`Supply`) or accept (`Demand`) a good.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Offer {
    Supply { entity: EntityId, good: GoodId },
    Demand { entity: EntityId, good: GoodId },
}

impl Offer {
    pub fn supply(entity: &EntityId, good: &GoodId) -> Self {
        Offer::Supply {
            entity: entity.clone(),
            good: good.clone(),
        }
    }

    pub fn demand(entity: &EntityId, good: &GoodId) -> Self {
        Offer::Demand {
            entity: entity.clone(),
            good: good.clone(),
        }
    }

    pub fn entity(&self) -> &EntityId {
        match self {
            Offer::Supply { entity, .. } | Offer::Demand { entity, .. } => entity,
        }
    }

    pub fn good(&self) -> &GoodId {
        match self {
            Offer::Supply { good, .. } | Offer::Demand { good, .. } => good,
        }
    }

    pub fn is_supply(&self) -> bool {
        matches!(self, Offer::Supply { .. })
    }
}

impl fmt::Debug for Offer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Offer::Supply { entity, good } => write!(f, "{entity}-{good}->"),
            Offer::Demand { entity, good } => write!(f, "-{good}->{entity}"),
        }
    }
}

/// The supply and demand available at one step of the model.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct State {
    offers: Multiset<Offer>,
}

impl State {
    pub fn new(offers: Multiset<Offer>) -> Self {
        Self { offers }
    }

    pub fn offers(&self) -> &Multiset<Offer> {
        &self.offers
    }

    pub fn into_offers(self) -> Multiset<Offer> {
        self.offers
    }
}

impl FromIterator<Offer> for State {
    fn from_iter<I: IntoIterator<Item = Offer>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.offers.fmt(f)
    }
}

/// A gift of `good` from `supplier` to `recipient`.
///
/// Field order gives the ordering used for tie-breaking: supplier, then
/// good, then recipient.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transaction {
    supplier: EntityId,
    good: GoodId,
    recipient: EntityId,
}

impl Transaction {
    pub fn new(supplier: &EntityId, good: &GoodId, recipient: &EntityId) -> Result<Self> {
        if supplier == recipient {
            return Err(Error::SelfTransaction(supplier.clone(), good.clone()));
        }
        Ok(Self {
            supplier: supplier.clone(),
            good: good.clone(),
            recipient: recipient.clone(),
        })
    }

    pub fn supplier(&self) -> &EntityId {
        &self.supplier
    }

    pub fn good(&self) -> &GoodId {
        &self.good
    }

    pub fn recipient(&self) -> &EntityId {
        &self.recipient
    }

    pub fn involves(&self, entity: &EntityId) -> bool {
        &self.supplier == entity || &self.recipient == entity
    }

    /// The supply and demand offer this transaction consumes.
    pub fn offers(&self) -> [Offer; 2] {
        [
            Offer::supply(&self.supplier, &self.good),
            Offer::demand(&self.recipient, &self.good),
        ]
    }
}

impl fmt::Display for Transaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}->{}", self.supplier, self.good, self.recipient)
    }
}

impl fmt::Debug for Transaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A multiset of transactions realised together at one step.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct TransactionSet {
    transactions: Multiset<Transaction>,
}

impl TransactionSet {
    pub fn new(transactions: Multiset<Transaction>) -> Self {
        Self { transactions }
    }

    pub fn transactions(&self) -> &Multiset<Transaction> {
        &self.transactions
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn contains(&self, t: &Transaction) -> bool {
        self.transactions.contains(t)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::new(self.transactions.union(&other.transactions))
    }

    /// One supply and one demand offer per transaction occurrence.
    pub fn footprint(&self) -> Multiset<Offer> {
        let mut out = Multiset::new();
        for (t, n) in self.transactions.iter() {
            for offer in t.offers() {
                out.insert_n(offer, n);
            }
        }
        out
    }

    pub fn is_admissible(&self, state: &State) -> bool {
        self.footprint().is_subset(state.offers())
    }
}

impl FromIterator<Transaction> for TransactionSet {
    fn from_iter<I: IntoIterator<Item = Transaction>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

impl fmt::Debug for TransactionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.transactions.fmt(f)
    }
}
