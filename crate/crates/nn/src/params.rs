//! Named parameter storage with gradients and optimizer state.

use std::collections::HashMap;

use crate::scalar::Scalar;
use crate::{NnError, Result};

/// One named parameter array with its gradient and lazily-allocated
/// optimizer state.
#[derive(Debug, Clone)]
pub struct ParamEntry<S> {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: Vec<S>,
    pub grad: Vec<S>,
    pub adam_m: Option<Vec<S>>,
    pub adam_v: Option<Vec<S>>,
    pub sgd_vel: Option<Vec<S>>,
}

impl<S: Scalar> ParamEntry<S> {
    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// Ordered collection of parameters. Iteration order is registration order,
/// which keeps optimizer updates, checkpoints and gradient checks
/// deterministic.
#[derive(Debug, Clone, Default)]
pub struct ParamStore<S> {
    entries: Vec<ParamEntry<S>>,
    index: HashMap<String, usize>,
    /// Shared optimizer timestep (Adam bias correction).
    pub t: u64,
}

impl<S: Scalar> ParamStore<S> {
    pub fn new() -> Self {
        ParamStore {
            entries: Vec::new(),
            index: HashMap::new(),
            t: 0,
        }
    }

    pub fn register(&mut self, name: &str, shape: &[usize], value: Vec<S>) -> Result<()> {
        let len: usize = shape.iter().product();
        if value.len() != len {
            return Err(NnError::ShapeMismatch(format!(
                "param `{name}`: {} values for shape {:?}",
                value.len(),
                shape
            )));
        }
        if self.index.contains_key(name) {
            return Err(NnError::Config(format!("param `{name}` already registered")));
        }
        self.index.insert(name.to_string(), self.entries.len());
        self.entries.push(ParamEntry {
            name: name.to_string(),
            shape: shape.to_vec(),
            grad: vec![S::ZERO; len],
            value,
            adam_m: None,
            adam_v: None,
            sgd_vel: None,
        });
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn entry(&self, name: &str) -> &ParamEntry<S> {
        &self.entries[*self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown param `{name}`"))]
    }

    pub fn entry_mut(&mut self, name: &str) -> &mut ParamEntry<S> {
        let i = *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown param `{name}`"));
        &mut self.entries[i]
    }

    #[inline]
    pub fn value(&self, name: &str) -> &[S] {
        &self.entry(name).value
    }

    #[inline]
    pub fn value_mut(&mut self, name: &str) -> &mut [S] {
        &mut self.entry_mut(name).value
    }

    #[inline]
    pub fn grad(&self, name: &str) -> &[S] {
        &self.entry(name).grad
    }

    #[inline]
    pub fn grad_mut(&mut self, name: &str) -> &mut [S] {
        &mut self.entry_mut(name).grad
    }

    pub fn entries(&self) -> impl Iterator<Item = &ParamEntry<S>> {
        self.entries.iter()
    }

    pub fn entry_at(&self, i: usize) -> &ParamEntry<S> {
        &self.entries[i]
    }

    pub fn entry_at_mut(&mut self, i: usize) -> &mut ParamEntry<S> {
        &mut self.entries[i]
    }

    pub fn entries_mut(&mut self) -> impl Iterator<Item = &mut ParamEntry<S>> {
        self.entries.iter_mut()
    }

    pub fn n_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn n_params(&self) -> usize {
        self.entries.iter().map(|e| e.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        for e in &mut self.entries {
            e.grad.iter_mut().for_each(|g| *g = S::ZERO);
        }
    }

    /// Copies parameter values from another store with identical layout.
    pub fn copy_values_from(&mut self, other: &ParamStore<S>) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(NnError::ShapeMismatch(
                "param stores have different entry counts".into(),
            ));
        }
        for (dst, src) in self.entries.iter_mut().zip(other.entries.iter()) {
            if dst.name != src.name || dst.value.len() != src.value.len() {
                return Err(NnError::ShapeMismatch(format!(
                    "param mismatch `{}` vs `{}`",
                    dst.name, src.name
                )));
            }
            dst.value.copy_from_slice(&src.value);
        }
        Ok(())
    }

    /// Widened copy (values only) for gradient checking.
    pub fn cast<T: Scalar>(&self) -> ParamStore<T> {
        let mut out = ParamStore::new();
        for e in &self.entries {
            let vals: Vec<T> = e.value.iter().map(|v| T::from_f64(v.to_f64())).collect();
            out.register(&e.name, &e.shape, vals).expect("cast register");
        }
        out.t = self.t;
        out
    }

    /// Total squared L2 norm of all gradients.
    pub fn grad_sq_norm(&self) -> f64 {
        self.entries
            .iter()
            .flat_map(|e| e.grad.iter())
            .map(|g| {
                let x = g.to_f64();
                x * x
            })
            .sum()
    }

    /// FNV-1a hash over the exact bit patterns of all parameter values, in
    /// registration order. Used to assert "this component did not move".
    pub fn value_bits_hash(&self) -> u64 {
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        let mut eat = |b: u8| {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        };
        for e in &self.entries {
            for byte in e.name.as_bytes() {
                eat(*byte);
            }
            for v in &e.value {
                for byte in v.to_f64().to_le_bytes() {
                    eat(byte);
                }
            }
        }
        h
    }
}
