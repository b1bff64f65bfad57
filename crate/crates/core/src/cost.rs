use serde::Serialize;

/// Resources used by one gadget invocation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct GadgetCost {
    pub physical_qubits: u64,
    pub duration_s: f64,
    pub logical_error: f64,
    pub ccz_consumed: u64,
    /// Qubit-seconds, `physical_qubits * duration_s`.
    pub volume: f64,
}

impl GadgetCost {
    pub fn new(
        physical_qubits: u64,
        duration_s: f64,
        logical_error: f64,
        ccz_consumed: u64,
    ) -> Self {
        Self {
            physical_qubits,
            duration_s,
            logical_error,
            ccz_consumed,
            volume: physical_qubits as f64 * duration_s,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volume_is_product() {
        let c = GadgetCost::new(1000, 0.5, 1e-9, 3);
        assert_eq!(c.volume, 500.0);
        assert_eq!(GadgetCost::default().volume, 0.0);
    }
}
