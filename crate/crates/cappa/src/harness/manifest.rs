//! Run manifests: enough provenance to reproduce every run bit-identically
//! with the same binary. The manifest hash covers only the deterministic
//! fields, so a rerun of the same configuration carries the same hash even
//! though wall-clock readings differ.

use sha2::{Digest, Sha256};

use crate::analysis::TheoryConstants;

#[derive(Debug, Clone)]
pub struct RunManifest {
    /// Full configuration snapshot, serialized form.
    pub config_snapshot: String,
    pub library_version: String,
    /// Flat key-value constants report; empty when the experiment derives none.
    pub constants: Vec<(String, String)>,
    /// Sub-seed of each run, in execution order.
    pub run_seeds: Vec<u64>,
    /// Wall clock of each run in nanoseconds; excluded from the hash.
    pub wall_clock_ns: Vec<u128>,
    /// Excluded from the hash: describes where the numbers were measured,
    /// not what they are.
    pub host: String,
}

impl RunManifest {
    pub fn new(config_snapshot: String, run_seeds: Vec<u64>) -> Self {
        Self {
            config_snapshot,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            constants: Vec::new(),
            run_seeds,
            wall_clock_ns: Vec::new(),
            host: host_description(),
        }
    }

    pub fn with_constants(mut self, constants: &TheoryConstants) -> Self {
        self.constants = constants_report(constants);
        self
    }

    /// SHA-256 over the deterministic fields in a fixed order.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"config\0");
        h.update(self.config_snapshot.as_bytes());
        h.update(b"\0version\0");
        h.update(self.library_version.as_bytes());
        h.update(b"\0constants\0");
        for (k, v) in &self.constants {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\0");
        }
        h.update(b"seeds\0");
        for s in &self.run_seeds {
            h.update(s.to_le_bytes());
        }
        let digest = h.finalize();
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }
}

pub fn host_description() -> String {
    format!(
        "{}-{}",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

/// Flat key-value rendering of the constants, full float precision, fixed
/// key order.
pub fn constants_report(c: &TheoryConstants) -> Vec<(String, String)> {
    let f = |v: f64| format!("{v:.16e}");
    let mut out = vec![
        ("delta_2s".into(), f(c.delta_2s)),
        (
            "delta_source".into(),
            if c.delta_source.is_certified() {
                "exact_bruteforce".into()
            } else {
                "surrogate_bound".into()
            },
        ),
        (
            "certified".into(),
            if c.delta_source.is_certified() {
                "true".into()
            } else {
                "false".into()
            },
        ),
        ("mu".into(), f(c.mu)),
        ("lipschitz".into(), f(c.lipschitz)),
        ("spectral_norm".into(), f(c.spectral_norm)),
        ("eta".into(), f(c.eta)),
        ("eta_max".into(), f(c.eta_max)),
        ("c_bar".into(), f(c.c_bar)),
        ("c".into(), f(c.c)),
        ("epsilon_c".into(), f(c.epsilon_c)),
        ("alpha1".into(), f(c.alpha1)),
        ("alpha2".into(), f(c.alpha2)),
        ("gamma1".into(), f(c.gamma1)),
        ("gamma2".into(), f(c.gamma2)),
        ("s1".into(), f(c.s1)),
        ("s2".into(), f(c.s2)),
        ("a1".into(), f(c.a1)),
        ("a2".into(), f(c.a2)),
    ];
    match c.settle_bound {
        Some(b) => out.push(("settle_bound".into(), f(b))),
        None => out.push(("settle_bound".into(), "unavailable".into())),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> RunManifest {
        RunManifest {
            config_snapshot: "trials = 3".into(),
            library_version: "0.0.0".into(),
            constants: vec![("c".into(), "0.5".into())],
            run_seeds: vec![1, 2, 3],
            wall_clock_ns: vec![10, 20, 30],
            host: "testhost".into(),
        }
    }

    #[test]
    fn hash_ignores_timing_and_host() {
        let a = manifest();
        let mut b = manifest();
        b.wall_clock_ns = vec![99];
        b.host = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
    }

    #[test]
    fn hash_tracks_deterministic_fields() {
        let a = manifest();
        let mut b = manifest();
        b.run_seeds = vec![1, 2, 4];
        assert_ne!(a.hash(), b.hash());
        let mut c = manifest();
        c.config_snapshot = "trials = 4".into();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
