// SPDX-License-Identifier: Apache-2.0

//! Runtime values and world state.

use crate::frontend::{DappModel, Type};
use crate::Word;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// The zero address.
pub const ZERO_ADDRESS: &str = "0x0";

/// Addresses are symbolic: account role names, contract names (one
/// deployed instance per contract) or [`ZERO_ADDRESS`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Value {
    Uint(Word),
    Bool(bool),
    Address(String),
}

impl Value {
    pub fn zero_of(ty: &Type) -> Value {
        match ty {
            Type::Bool => Value::Bool(false),
            Type::Address => Value::Address(ZERO_ADDRESS.to_string()),
            _ => Value::Uint(Word::zero()),
        }
    }

    pub fn has_type(&self, ty: &Type) -> bool {
        matches!(
            (self, ty),
            (Value::Uint(_), Type::Uint) | (Value::Bool(_), Type::Bool) | (Value::Address(_), Type::Address)
        )
    }

    pub fn as_uint(&self) -> Option<&Word> {
        match self {
            Value::Uint(w) => Some(w),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_address(&self) -> Option<&str> {
        match self {
            Value::Address(a) => Some(a),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Uint(w) => write!(f, "{w}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Address(a) => write!(f, "@{a}"),
        }
    }
}

/// Contents of one state variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Scalar(Value),
    Array(Vec<Value>),
    /// Only keys written at least once are present; others read as zero.
    Mapping(#[serde(with = "pairs")] BTreeMap<Value, Value>),
}

/// Maps with non-string keys serialise as lists of `[key, value]` pairs.
mod pairs {
    use super::Value;
    use serde::{Deserialize, Deserializer, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(m: &BTreeMap<Value, Value>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Value, Value>, D::Error> {
        Ok(Vec::<(Value, Value)>::deserialize(d)?.into_iter().collect())
    }
}

impl Slot {
    pub fn initial(ty: &Type) -> Slot {
        match ty {
            Type::Array(_) => Slot::Array(Vec::new()),
            Type::Mapping(..) => Slot::Mapping(BTreeMap::new()),
            t => Slot::Scalar(Value::zero_of(t)),
        }
    }
}

/// Balances of every address plus the storage of deployed contracts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    pub balances: BTreeMap<String, Word>,
    /// Storage by contract, then by state variable.
    pub storage: BTreeMap<String, BTreeMap<String, Slot>>,
    pub deployed: BTreeSet<String>,
}

impl WorldState {
    /// Accounts funded by `balances`, nothing deployed.
    pub fn new(balances: BTreeMap<String, Word>) -> Self {
        WorldState {
            balances,
            ..Default::default()
        }
    }

    pub fn balance(&self, address: &str) -> Word {
        self.balances.get(address).cloned().unwrap_or_default()
    }

    /// Sum of every balance, for conservation checks.
    pub fn total_ether(&self) -> num_bigint::BigUint {
        self.balances
            .values()
            .map(Word::as_biguint)
            .sum()
    }

    /// Moves `amount` between addresses; false when the payer lacks funds.
    pub fn move_ether(&mut self, from: &str, to: &str, amount: &Word) -> bool {
        let have = self.balance(from);
        let Some(rest) = have.checked_sub(amount) else {
            return false;
        };
        self.balances.insert(from.to_string(), rest);
        let credited = self.balance(to).wrapping_add(amount);
        self.balances.insert(to.to_string(), credited);
        true
    }

    /// Marks `contract` deployed with zero-initialised storage.
    pub fn deploy(&mut self, model: &DappModel, contract: &str) {
        let Some(decl) = model.decl(contract) else {
            return;
        };
        let slots = decl
            .state_vars
            .iter()
            .map(|v| (v.name.clone(), Slot::initial(&v.ty)))
            .collect();
        self.storage.insert(contract.to_string(), slots);
        self.deployed.insert(contract.to_string());
        if let Some(c) = model.contract(contract) {
            if !c.ether.is_zero() {
                let held = self.balance(contract).wrapping_add(&c.ether);
                self.balances.insert(contract.to_string(), held);
            }
        }
    }
}
