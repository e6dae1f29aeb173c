use std::collections::VecDeque;

use nalgebra::Matrix2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{phase_free_overlap, C64};
use crate::pulses::PhysicalGate;

const SAME: f64 = 1.0 - 1e-10;

/// Generators tried, in order, when closing the group.
const GENERATORS: [PhysicalGate; 6] = [
    PhysicalGate::X90,
    PhysicalGate::Xm90,
    PhysicalGate::Y90,
    PhysicalGate::Ym90,
    PhysicalGate::X180,
    PhysicalGate::Y180,
];

#[derive(Debug, Clone, PartialEq)]
pub struct Clifford {
    pub index: usize,
    pub unitary: Matrix2<C64>,
    /// Physical gates, first applied first.
    pub decomposition: Vec<PhysicalGate>,
}

/// The 24 single-qubit Cliffords with minimal decompositions, their
/// multiplication table and inverses.
#[derive(Debug, Clone)]
pub struct CliffordTable {
    elements: Vec<Clifford>,
    /// `product[a][b]` is the index of `U_a · U_b`.
    product: Vec<[usize; 24]>,
    inverse: [usize; 24],
}

impl CliffordTable {
    /// Breadth-first closure from the identity, so every element carries a
    /// shortest decomposition. The identity is the single idle gate.
    pub fn new() -> Self {
        let mut elements = vec![Clifford {
            index: 0,
            unitary: Matrix2::identity(),
            decomposition: vec![PhysicalGate::I],
        }];
        let mut queue = VecDeque::from([(Matrix2::<C64>::identity(), Vec::<PhysicalGate>::new())]);
        while let Some((u, word)) = queue.pop_front() {
            for g in GENERATORS {
                let v = g.unitary() * u;
                if elements.iter().any(|c| phase_free_overlap(&c.unitary, &v) > SAME) {
                    continue;
                }
                let mut w = word.clone();
                w.push(g);
                elements.push(Clifford { index: elements.len(), unitary: v, decomposition: w.clone() });
                queue.push_back((v, w));
            }
        }
        assert_eq!(elements.len(), 24, "single-qubit Clifford group has 24 elements");
        let find = |v: &Matrix2<C64>| {
            elements
                .iter()
                .position(|c| phase_free_overlap(&c.unitary, v) > SAME)
                .expect("group is closed")
        };
        let product: Vec<[usize; 24]> = (0..24)
            .map(|a| std::array::from_fn(|b| find(&(elements[a].unitary * elements[b].unitary))))
            .collect();
        let inverse = std::array::from_fn(|a| find(&elements[a].unitary.adjoint()));
        Self { elements, product, inverse }
    }

    pub fn elements(&self) -> &[Clifford] {
        &self.elements
    }

    pub fn get(&self, index: usize) -> &Clifford {
        &self.elements[index]
    }

    /// Index of `U_a · U_b` (b applied first).
    pub fn compose(&self, a: usize, b: usize) -> usize {
        self.product[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    /// Index of the element equal to `u` up to global phase.
    pub fn find(&self, u: &Matrix2<C64>) -> Option<usize> {
        self.elements.iter().position(|c| phase_free_overlap(&c.unitary, u) > SAME)
    }

    pub fn of_gate(&self, gate: PhysicalGate) -> usize {
        self.find(&gate.unitary()).expect("every native gate is a Clifford")
    }

    /// Average number of physical gates per Clifford.
    pub fn mean_length(&self) -> f64 {
        self.elements.iter().map(|c| c.decomposition.len()).sum::<usize>() as f64 / 24.0
    }

    /// Index of the product of `indices`, first applied first.
    pub fn product_of(&self, indices: &[usize]) -> usize {
        indices.iter().fold(0, |acc, &c| self.compose(c, acc))
    }

    pub fn expand(&self, indices: &[usize]) -> Vec<PhysicalGate> {
        indices.iter().flat_map(|&c| self.elements[c].decomposition.iter().copied()).collect()
    }
}

impl Default for CliffordTable {
    fn default() -> Self {
        Self::new()
    }
}

/// A random Clifford sequence and the gate stream that executes it.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    pub cliffords: Vec<usize>,
    pub recovery: usize,
    /// Physical gates including any interleaved gate and the recovery.
    pub gates: Vec<PhysicalGate>,
}

/// `m` uniform Cliffords plus the element inverting their product.
pub fn random_sequence<R: Rng + ?Sized>(table: &CliffordTable, m: usize, rng: &mut R) -> Result<Sequence> {
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    let cliffords: Vec<usize> = (0..m).map(|_| rng.random_range(0..24)).collect();
    let recovery = table.inverse(table.product_of(&cliffords));
    let mut gates = table.expand(&cliffords);
    gates.extend_from_slice(&table.get(recovery).decomposition);
    Ok(Sequence { cliffords, recovery, gates })
}

/// Insert `gate` after every Clifford and recompute the recovery.
pub fn interleave(table: &CliffordTable, cliffords: &[usize], gate: PhysicalGate) -> Sequence {
    let g = table.of_gate(gate);
    let mut gates = Vec::new();
    let mut acc = 0;
    for &c in cliffords {
        gates.extend_from_slice(&table.get(c).decomposition);
        gates.push(gate);
        acc = table.compose(g, table.compose(c, acc));
    }
    let recovery = table.inverse(acc);
    gates.extend_from_slice(&table.get(recovery).decomposition);
    Sequence { cliffords: cliffords.to_vec(), recovery, gates }
}
