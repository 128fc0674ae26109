//! Dense statevector simulation of the `{H, RX, RY, RZ, CZ}` gate set.
//!
//! States are length-2^n complex vectors over the computational basis with
//! qubit 0 stored in the least-significant bit of the basis index. All
//! operations are pure functions of their inputs; in-place variants exist for
//! the hot paths but never share mutable state between callers.

use num_complex::Complex64;
use thiserror::Error;

/// Desk-scale cap: dense vectors above 2^20 amplitudes are out of scope.
pub const MAX_QUBITS: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("qubit count {0} outside supported range 1..={MAX_QUBITS}")]
    InvalidQubitCount(usize),
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    InvalidQubit { index: usize, n_qubits: usize },
    #[error("parameter slot {0} not covered by the supplied parameter vector")]
    MissingParameter(usize),
    #[error("circuit expects {expected} parameters, got {got}")]
    ParamLengthMismatch { expected: usize, got: usize },
    #[error("circuit uses {circuit} qubits but the state has {state}")]
    QubitCountMismatch { circuit: usize, state: usize },
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
}

/// A single gate instance. Rotation gates carry the index of their angle in
/// the parameter vector rather than the angle itself, so one circuit can be
/// evaluated at many parameter points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    H { qubit: usize },
    Rx { qubit: usize, slot: usize },
    Ry { qubit: usize, slot: usize },
    Rz { qubit: usize, slot: usize },
    Cz { control: usize, target: usize },
}

impl Gate {
    /// The qubit(s) the gate acts on: `(first, second)` with `second` set
    /// only for two-qubit gates.
    pub fn operands(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::H { qubit }
            | Gate::Rx { qubit, .. }
            | Gate::Ry { qubit, .. }
            | Gate::Rz { qubit, .. } => (qubit, None),
            Gate::Cz { control, target } => (control, Some(target)),
        }
    }

    /// Parameter slot, present exactly for the rotation gates.
    pub fn param_slot(&self) -> Option<usize> {
        match *self {
            Gate::Rx { slot, .. } | Gate::Ry { slot, .. } | Gate::Rz { slot, .. } => Some(slot),
            Gate::H { .. } | Gate::Cz { .. } => None,
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<(), SimError> {
        let (a, b) = self.operands();
        for index in std::iter::once(a).chain(b) {
            if index >= n_qubits {
                return Err(SimError::InvalidQubit { index, n_qubits });
            }
        }
        if let Gate::Cz { control, target } = *self {
            if control == target {
                return Err(SimError::InvalidCircuit(format!(
                    "CZ control and target must be distinct, got ({control}, {target})"
                )));
            }
        }
        Ok(())
    }
}

/// An ordered gate sequence with parameter slots `0..n_params`, each slot
/// used by exactly one gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    n_params: usize,
}

impl Circuit {
    /// Validates qubit indices and the slot numbering invariant.
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self, SimError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(SimError::InvalidQubitCount(n_qubits));
        }
        let mut slots: Vec<usize> = Vec::new();
        for gate in &gates {
            gate.validate(n_qubits)?;
            if let Some(slot) = gate.param_slot() {
                slots.push(slot);
            }
        }
        let n_params = slots.len();
        let mut seen = vec![false; n_params];
        for slot in slots {
            if slot >= n_params || seen[slot] {
                return Err(SimError::InvalidCircuit(format!(
                    "parameter slots must be exactly 0..{n_params}, each used once (slot {slot})"
                )));
            }
            seen[slot] = true;
        }
        Ok(Self {
            n_qubits,
            gates,
            n_params,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Number of distinct rotation parameters.
    pub fn param_count(&self) -> usize {
        self.n_params
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Circuit depth under greedy as-soon-as-possible layering: gates that
    /// share a qubit cannot share a layer.
    pub fn depth(&self) -> usize {
        let mut next_free = vec![0usize; self.n_qubits];
        let mut depth = 0;
        for gate in &self.gates {
            let (a, b) = gate.operands();
            let layer = match b {
                Some(b) => next_free[a].max(next_free[b]),
                None => next_free[a],
            };
            next_free[a] = layer + 1;
            if let Some(b) = b {
                next_free[b] = layer + 1;
            }
            depth = depth.max(layer + 1);
        }
        depth
    }

    /// Concatenation, renumbering the right-hand side's parameter slots to
    /// follow this circuit's.
    pub fn concat(&self, other: &Circuit) -> Result<Circuit, SimError> {
        if self.n_qubits != other.n_qubits {
            return Err(SimError::QubitCountMismatch {
                circuit: other.n_qubits,
                state: self.n_qubits,
            });
        }
        let offset = self.n_params;
        let mut gates = self.gates.clone();
        gates.extend(other.gates.iter().map(|gate| match *gate {
            Gate::Rx { qubit, slot } => Gate::Rx {
                qubit,
                slot: slot + offset,
            },
            Gate::Ry { qubit, slot } => Gate::Ry {
                qubit,
                slot: slot + offset,
            },
            Gate::Rz { qubit, slot } => Gate::Rz {
                qubit,
                slot: slot + offset,
            },
            other => other,
        }));
        Circuit::new(self.n_qubits, gates)
    }
}

/// The full complex amplitude vector of an n-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The computational basis state |0...0>.
    pub fn zero(n_qubits: usize) -> Result<Self, SimError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(SimError::InvalidQubitCount(n_qubits));
        }
        let mut amps = vec![Complex64::ZERO; 1 << n_qubits];
        amps[0] = Complex64::ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Uniform superposition H^n |0...0>, the generator's preparation layer.
    pub fn plus(n_qubits: usize) -> Result<Self, SimError> {
        let mut state = Self::zero(n_qubits)?;
        for qubit in 0..n_qubits {
            state.apply_gate_in_place(&Gate::H { qubit }, &[])?;
        }
        Ok(state)
    }

    /// Builds a state from raw amplitudes; the caller is responsible for
    /// normalization.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self, SimError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(SimError::InvalidQubitCount(n_qubits));
        }
        if amps.len() != 1 << n_qubits {
            return Err(SimError::InvalidCircuit(format!(
                "expected 2^{} amplitudes, got {}",
                n_qubits,
                amps.len()
            )));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Born-rule probabilities |alpha_k|^2 over the 2^n basis states.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply_gate(&self, gate: &Gate, params: &[f64]) -> Result<Self, SimError> {
        let mut next = self.clone();
        next.apply_gate_in_place(gate, params)?;
        Ok(next)
    }

    pub fn apply_gate_in_place(&mut self, gate: &Gate, params: &[f64]) -> Result<(), SimError> {
        gate.validate(self.n_qubits)?;
        let angle = match gate.param_slot() {
            Some(slot) => Some(
                *params
                    .get(slot)
                    .ok_or(SimError::MissingParameter(slot))?,
            ),
            None => None,
        };
        match *gate {
            Gate::H { qubit } => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let m = [
                    Complex64::new(s, 0.0),
                    Complex64::new(s, 0.0),
                    Complex64::new(s, 0.0),
                    Complex64::new(-s, 0.0),
                ];
                self.apply_single_qubit(qubit, &m);
            }
            Gate::Rx { qubit, .. } => {
                let half = angle.unwrap() / 2.0;
                let (sin, cos) = half.sin_cos();
                let m = [
                    Complex64::new(cos, 0.0),
                    Complex64::new(0.0, -sin),
                    Complex64::new(0.0, -sin),
                    Complex64::new(cos, 0.0),
                ];
                self.apply_single_qubit(qubit, &m);
            }
            Gate::Ry { qubit, .. } => {
                let half = angle.unwrap() / 2.0;
                let (sin, cos) = half.sin_cos();
                let m = [
                    Complex64::new(cos, 0.0),
                    Complex64::new(-sin, 0.0),
                    Complex64::new(sin, 0.0),
                    Complex64::new(cos, 0.0),
                ];
                self.apply_single_qubit(qubit, &m);
            }
            Gate::Rz { qubit, .. } => {
                let half = angle.unwrap() / 2.0;
                let (sin, cos) = half.sin_cos();
                let m = [
                    Complex64::new(cos, -sin),
                    Complex64::ZERO,
                    Complex64::ZERO,
                    Complex64::new(cos, sin),
                ];
                self.apply_single_qubit(qubit, &m);
            }
            Gate::Cz { control, target } => self.apply_cz(control, target),
        }
        Ok(())
    }

    /// Applies the circuit's gates in list order.
    pub fn apply_circuit(&self, circuit: &Circuit, params: &[f64]) -> Result<Self, SimError> {
        if circuit.n_qubits() != self.n_qubits {
            return Err(SimError::QubitCountMismatch {
                circuit: circuit.n_qubits(),
                state: self.n_qubits,
            });
        }
        if params.len() != circuit.param_count() {
            return Err(SimError::ParamLengthMismatch {
                expected: circuit.param_count(),
                got: params.len(),
            });
        }
        let mut next = self.clone();
        for gate in circuit.gates() {
            next.apply_gate_in_place(gate, params)?;
        }
        Ok(next)
    }

    /// In-place 2x2 unitary on one qubit; `m` is row-major [m00, m01, m10, m11].
    fn apply_single_qubit(&mut self, qubit: usize, m: &[Complex64; 4]) {
        let stride = 1usize << qubit;
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for low in base..base + stride {
                let high = low + stride;
                let a0 = self.amps[low];
                let a1 = self.amps[high];
                self.amps[low] = m[0] * a0 + m[1] * a1;
                self.amps[high] = m[2] * a0 + m[3] * a1;
            }
            base += stride * 2;
        }
    }

    fn apply_cz(&mut self, control: usize, target: usize) {
        let mask = (1usize << control) | (1usize << target);
        for (index, amp) in self.amps.iter_mut().enumerate() {
            if index & mask == mask {
                *amp = -*amp;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_close(actual: &[Complex64], expected: &[Complex64], tol: f64) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!(
                (a - e).norm() <= tol,
                "amplitude mismatch: {a} vs {e} (tol {tol})"
            );
        }
    }

    #[test]
    fn zero_state_examples() {
        let one = StateVector::zero(1).unwrap();
        assert_close(one.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)], 0.0);
        let two = StateVector::zero(2).unwrap();
        assert_eq!(two.amplitudes().len(), 4);
        assert_eq!(two.amplitudes()[0], c(1.0, 0.0));
        assert!(two.amplitudes()[1..].iter().all(|a| *a == Complex64::ZERO));
    }

    #[test]
    fn zero_state_rejects_out_of_range_counts() {
        assert_eq!(StateVector::zero(0), Err(SimError::InvalidQubitCount(0)));
        assert_eq!(
            StateVector::zero(MAX_QUBITS + 1),
            Err(SimError::InvalidQubitCount(MAX_QUBITS + 1))
        );
    }

    #[test]
    fn hadamard_on_zero() {
        let state = StateVector::zero(1)
            .unwrap()
            .apply_gate(&Gate::H { qubit: 0 }, &[])
            .unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_close(state.amplitudes(), &[c(s, 0.0), c(s, 0.0)], 1e-15);
    }

    #[test]
    fn rx_zero_angle_is_identity() {
        let state = StateVector::from_amplitudes(1, vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let out = state
            .apply_gate(&Gate::Rx { qubit: 0, slot: 0 }, &[0.0])
            .unwrap();
        assert_close(out.amplitudes(), state.amplitudes(), 1e-15);
    }

    #[test]
    fn cz_flips_only_one_one() {
        // |11> on 2 qubits is index 3.
        let mut amps = vec![Complex64::ZERO; 4];
        amps[3] = Complex64::ONE;
        let state = StateVector::from_amplitudes(2, amps).unwrap();
        let out = state
            .apply_gate(
                &Gate::Cz {
                    control: 0,
                    target: 1,
                },
                &[],
            )
            .unwrap();
        assert_eq!(out.amplitudes()[3], c(-1.0, 0.0));

        for basis in 0..3usize {
            let mut amps = vec![Complex64::ZERO; 4];
            amps[basis] = Complex64::ONE;
            let state = StateVector::from_amplitudes(2, amps.clone()).unwrap();
            let out = state
                .apply_gate(
                    &Gate::Cz {
                        control: 0,
                        target: 1,
                    },
                    &[],
                )
                .unwrap();
            assert_close(out.amplitudes(), &amps, 0.0);
        }
    }

    #[test]
    fn apply_gate_rejects_bad_indices_and_missing_params() {
        let state = StateVector::zero(2).unwrap();
        assert_eq!(
            state.apply_gate(&Gate::H { qubit: 2 }, &[]),
            Err(SimError::InvalidQubit {
                index: 2,
                n_qubits: 2
            })
        );
        assert_eq!(
            state.apply_gate(&Gate::Rx { qubit: 0, slot: 3 }, &[0.1, 0.2]),
            Err(SimError::MissingParameter(3))
        );
    }

    #[test]
    fn empty_circuit_is_identity() {
        let circuit = Circuit::new(2, vec![]).unwrap();
        assert_eq!(circuit.depth(), 0);
        let state = StateVector::zero(2).unwrap();
        let out = state.apply_circuit(&circuit, &[]).unwrap();
        assert_eq!(out, state);
    }

    #[test]
    fn hadamard_is_an_involution() {
        let circuit =
            Circuit::new(1, vec![Gate::H { qubit: 0 }, Gate::H { qubit: 0 }]).unwrap();
        let out = StateVector::zero(1)
            .unwrap()
            .apply_circuit(&circuit, &[])
            .unwrap();
        assert_close(out.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)], 1e-15);
    }

    #[test]
    fn hadamard_layer_gives_uniform_superposition() {
        let gates = (0..3).map(|qubit| Gate::H { qubit }).collect();
        let circuit = Circuit::new(3, gates).unwrap();
        let out = StateVector::zero(3)
            .unwrap()
            .apply_circuit(&circuit, &[])
            .unwrap();
        let expected = 1.0 / 8.0f64.sqrt();
        for amp in out.amplitudes() {
            assert!((amp - c(expected, 0.0)).norm() < 1e-15);
        }
        assert_eq!(StateVector::plus(3).unwrap(), out);
    }

    #[test]
    fn probabilities_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let state = StateVector::from_amplitudes(1, vec![c(s, 0.0), c(s, 0.0)]).unwrap();
        let probs = state.probabilities();
        assert!((probs[0] - 0.5).abs() < 1e-15);
        assert!((probs[1] - 0.5).abs() < 1e-15);

        let state = StateVector::from_amplitudes(1, vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let probs = state.probabilities();
        assert!((probs[0] - 0.36).abs() < 1e-15);
        assert!((probs[1] - 0.64).abs() < 1e-15);

        let probs = StateVector::zero(2).unwrap().probabilities();
        assert_eq!(probs, vec![1.0, 0.0, 0.0, 0.0]);
    }

    // Independent greedy-layering oracle for the depth examples, kept apart
    // from Circuit::depth on purpose.
    fn layering_oracle(n_qubits: usize, gates: &[Gate]) -> usize {
        let mut layers: Vec<Vec<usize>> = Vec::new(); // qubits used per layer
        for gate in gates {
            let (a, b) = gate.operands();
            let mut used: Vec<usize> = vec![a];
            used.extend(b);
            // Last layer that conflicts with this gate.
            let mut place = 0;
            for (i, layer) in layers.iter().enumerate() {
                if used.iter().any(|q| layer.contains(q)) {
                    place = i + 1;
                }
            }
            if place == layers.len() {
                layers.push(Vec::new());
            }
            layers[place].extend(used);
            let _ = n_qubits;
        }
        layers.len()
    }

    #[test]
    fn depth_examples() {
        let disjoint = Circuit::new(
            2,
            vec![Gate::Rx { qubit: 0, slot: 0 }, Gate::Rx { qubit: 1, slot: 1 }],
        )
        .unwrap();
        assert_eq!(disjoint.depth(), 1);
        assert_eq!(layering_oracle(2, disjoint.gates()), 1);

        let chained = Circuit::new(
            3,
            vec![
                Gate::Cz {
                    control: 0,
                    target: 1,
                },
                Gate::Cz {
                    control: 1,
                    target: 2,
                },
            ],
        )
        .unwrap();
        assert_eq!(layering_oracle(3, chained.gates()), 2);
        assert_eq!(chained.depth(), 2);
    }

    #[test]
    fn circuit_validates_slot_numbering() {
        // Slot used twice.
        assert!(Circuit::new(
            2,
            vec![Gate::Rx { qubit: 0, slot: 0 }, Gate::Ry { qubit: 1, slot: 0 }]
        )
        .is_err());
        // Slot out of range.
        assert!(Circuit::new(1, vec![Gate::Rx { qubit: 0, slot: 1 }]).is_err());
        // CZ on a single qubit.
        assert!(Circuit::new(
            2,
            vec![Gate::Cz {
                control: 1,
                target: 1
            }]
        )
        .is_err());
    }

    #[test]
    fn apply_circuit_rejects_param_length_mismatch() {
        let circuit = Circuit::new(1, vec![Gate::Rx { qubit: 0, slot: 0 }]).unwrap();
        let state = StateVector::zero(1).unwrap();
        assert_eq!(
            state.apply_circuit(&circuit, &[]),
            Err(SimError::ParamLengthMismatch {
                expected: 1,
                got: 0
            })
        );
    }

    // Strategy: a random circuit over exactly `n` qubits together with
    // matching random angles.
    fn gates_strategy(n: usize, max_gates: usize) -> impl Strategy<Value = (Circuit, Vec<f64>)> {
        let gate = (0..5u8, 0..n, 0..n.max(2), -3.2..3.2f64);
        proptest::collection::vec(gate, 0..=max_gates).prop_map(move |raw| {
            let mut gates = Vec::new();
            let mut angles = Vec::new();
            for (kind, a, b, angle) in raw {
                let slot = angles.len();
                match kind {
                    0 => gates.push(Gate::H { qubit: a }),
                    1 => {
                        gates.push(Gate::Rx { qubit: a, slot });
                        angles.push(angle);
                    }
                    2 => {
                        gates.push(Gate::Ry { qubit: a, slot });
                        angles.push(angle);
                    }
                    3 => {
                        gates.push(Gate::Rz { qubit: a, slot });
                        angles.push(angle);
                    }
                    _ => {
                        if n >= 2 {
                            let target = if a == b % n { (a + 1) % n } else { b % n };
                            gates.push(Gate::Cz { control: a, target });
                        }
                    }
                }
            }
            (Circuit::new(n, gates).unwrap(), angles)
        })
    }

    fn circuit_strategy(
        max_qubits: usize,
        max_gates: usize,
    ) -> impl Strategy<Value = (Circuit, Vec<f64>)> {
        (1..=max_qubits).prop_flat_map(move |n| gates_strategy(n, max_gates))
    }

    proptest! {
        #[test]
        fn norm_is_preserved((circuit, angles) in circuit_strategy(6, 24)) {
            let state = StateVector::zero(circuit.n_qubits()).unwrap();
            let out = state.apply_circuit(&circuit, &angles).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
        }

        #[test]
        fn gates_invert((circuit, angles) in circuit_strategy(5, 16)) {
            let state = StateVector::zero(circuit.n_qubits()).unwrap();
            let forward = state.apply_circuit(&circuit, &angles).unwrap();
            // Undo in reverse order: H and CZ are self-inverse, rotations
            // invert by negating the angle.
            let neg: Vec<f64> = angles.iter().map(|a| -a).collect();
            let mut back = forward;
            for gate in circuit.gates().iter().rev() {
                back = back.apply_gate(gate, &neg).unwrap();
            }
            for (a, e) in back.amplitudes().iter().zip(state.amplitudes()) {
                prop_assert!((a - e).norm() < 1e-10);
            }
        }

        #[test]
        fn depth_is_subadditive_under_concat(
            (left, right) in (1..=4usize)
                .prop_flat_map(|n| (gates_strategy(n, 12), gates_strategy(n, 12)))
        ) {
            let (left, _) = left;
            let (right, _) = right;
            let joined = left.concat(&right).unwrap();
            prop_assert!(joined.depth() <= left.depth() + right.depth());
            prop_assert_eq!(joined.param_count(), left.param_count() + right.param_count());
        }

        #[test]
        fn cz_preserves_probabilities((circuit, angles) in circuit_strategy(4, 12)) {
            prop_assume!(circuit.n_qubits() >= 2);
            let state = StateVector::zero(circuit.n_qubits()).unwrap();
            let out = state.apply_circuit(&circuit, &angles).unwrap();
            let swept = out
                .apply_gate(&Gate::Cz { control: 0, target: circuit.n_qubits() - 1 }, &[])
                .unwrap();
            for (p, q) in out.probabilities().iter().zip(swept.probabilities()) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn greedy_depth_matches_oracle_on_random_circuits() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(2..=5usize);
            let len = rng.gen_range(0..=20usize);
            let mut gates = Vec::new();
            let mut slot = 0;
            for _ in 0..len {
                match rng.gen_range(0..3u8) {
                    0 => gates.push(Gate::H {
                        qubit: rng.gen_range(0..n),
                    }),
                    1 => {
                        gates.push(Gate::Rx {
                            qubit: rng.gen_range(0..n),
                            slot,
                        });
                        slot += 1;
                    }
                    _ => {
                        let a = rng.gen_range(0..n);
                        let b = (a + rng.gen_range(1..n)) % n;
                        gates.push(Gate::Cz {
                            control: a,
                            target: b,
                        });
                    }
                }
            }
            let circuit = Circuit::new(n, gates).unwrap();
            assert_eq!(circuit.depth(), layering_oracle(n, circuit.gates()));
        }
    }
}
