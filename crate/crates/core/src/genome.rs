//! Genome decoding.
//!
//! A genome is ten reals in `[0, 1]`. Each gene maps linearly onto the range
//! of one controller parameter; parameters outside the genome are fixed
//! constants. The decoded single-leg parameters are copied verbatim to all
//! four legs: left/right mirroring lives in the simulator's joint-axis signs.
//!
//! Gene order:
//!
//! | index | parameter                         | range              |
//! |-------|-----------------------------------|--------------------|
//! | 0     | gain `gamma`                      | [0.2, 0.6]         |
//! | 1     | duty `d`                          | [0.2, 0.8]         |
//! | 2     | coupling `w` / attraction `alpha` | [0.1, 2.0] / [0.005, 0.1] |
//! | 3     | joint-1 target amplitude          | [0.0, 0.3]         |
//! | 4     | joint-1 target offset             | [0.36, 1.06]       |
//! | 5     | joint-1 phase shift               | 2pi [-0.1, 0.1]    |
//! | 6     | joint-2 target swing amplitude    | [0.0, 0.7]         |
//! | 7     | joint-2 target stance amplitude   | [0.0, 0.7]         |
//! | 8     | joint-2 target offset             | [0.85, 1.55]       |
//! | 9     | joint-2 phase shift               | 2pi [-0.1, 0.1]    |

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cpg::{ControllerParams, Coupling, GlobalParams, LegParams, Mode, NUM_LEGS};
use crate::error::{Error, Result};

pub const GENOME_LEN: usize = 10;

pub const FREQUENCY: f64 = 0.25;
pub const JOINT0_TARGET_AMP: f64 = 0.0;
pub const JOINT0_TARGET_OFFSET: f64 = 0.18;
/// Per-leg phase fractions of the lateral-sequence walk, in leg order
/// (front-left, front-right, back-left, back-right).
pub const WALK_LEG_PHASES: [f64; NUM_LEGS] = [0.0, 0.5, 0.25, 0.75];

const PHASE_SHIFT_BOUND: f64 = 2.0 * PI * 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Genome([f64; GENOME_LEN]);

impl Genome {
    pub fn new(values: [f64; GENOME_LEN]) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::GeneDomain { index, value });
            }
        }
        Ok(Genome(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; GENOME_LEN] = values.try_into().map_err(|_| Error::GenomeLength {
            expected: GENOME_LEN,
            got: values.len(),
        })?;
        Self::new(arr)
    }

    pub fn uniform(value: f64) -> Result<Self> {
        Self::new([value; GENOME_LEN])
    }

    pub fn values(&self) -> &[f64; GENOME_LEN] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Genome {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Genome::from_slice(&v)
    }
}

impl From<Genome> for Vec<f64> {
    fn from(g: Genome) -> Self {
        g.0.to_vec()
    }
}

/// One row of the parameter table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamEntry {
    pub name: &'static str,
    pub lower: f64,
    pub upper: f64,
    /// Gene index for evolved parameters, `None` for fixed ones.
    pub gene: Option<usize>,
}

impl ParamEntry {
    const fn evolved(name: &'static str, lower: f64, upper: f64, gene: usize) -> Self {
        ParamEntry {
            name,
            lower,
            upper,
            gene: Some(gene),
        }
    }

    const fn fixed(name: &'static str, value: f64) -> Self {
        ParamEntry {
            name,
            lower: value,
            upper: value,
            gene: None,
        }
    }

    pub fn is_evolved(&self) -> bool {
        self.gene.is_some()
    }

    fn map(&self, gene: f64) -> f64 {
        self.lower + gene * (self.upper - self.lower)
    }
}

/// The parameter table for one mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSpec {
    pub mode: Mode,
    pub entries: Vec<ParamEntry>,
}

impl ParamSpec {
    pub fn for_mode(mode: Mode) -> Self {
        let coupling_gene = match mode {
            Mode::OpenLoop => ParamEntry::evolved("coupling_strength", 0.1, 2.0, 2),
            Mode::ClosedLoop => ParamEntry::evolved("attraction", 0.005, 0.1, 2),
        };
        let mut entries = vec![
            ParamEntry::fixed("frequency", FREQUENCY),
            ParamEntry::evolved("gain", 0.2, 0.6, 0),
            ParamEntry::evolved("duty", 0.2, 0.8, 1),
            coupling_gene,
            ParamEntry::fixed("joint0_target_amp", JOINT0_TARGET_AMP),
            ParamEntry::fixed("joint0_target_offset", JOINT0_TARGET_OFFSET),
            ParamEntry::evolved("joint1_target_amp", 0.0, 0.3, 3),
            ParamEntry::evolved("joint1_target_offset", 0.36, 1.06, 4),
            ParamEntry::evolved("joint1_phase_shift", -PHASE_SHIFT_BOUND, PHASE_SHIFT_BOUND, 5),
            ParamEntry::evolved("joint2_target_swing", 0.0, 0.7, 6),
            ParamEntry::evolved("joint2_target_stance", 0.0, 0.7, 7),
            ParamEntry::evolved("joint2_target_offset", 0.85, 1.55, 8),
            ParamEntry::evolved("joint2_phase_shift", -PHASE_SHIFT_BOUND, PHASE_SHIFT_BOUND, 9),
        ];
        if mode == Mode::OpenLoop {
            for (leg, frac) in WALK_LEG_PHASES.iter().enumerate() {
                const NAMES: [&str; 4] = [
                    "leg_phase_front_left",
                    "leg_phase_front_right",
                    "leg_phase_back_left",
                    "leg_phase_back_right",
                ];
                entries.push(ParamEntry::fixed(NAMES[leg], *frac));
            }
        }
        ParamSpec { mode, entries }
    }

    /// Evolved entries sorted by gene index.
    pub fn evolved(&self) -> Vec<ParamEntry> {
        let mut out: Vec<_> = self.entries.iter().copied().filter(ParamEntry::is_evolved).collect();
        out.sort_by_key(|e| e.gene);
        out
    }

    fn gene_value(&self, genome: &Genome, name: &str) -> f64 {
        let entry = self
            .entries
            .iter()
            .find(|e| e.name == name)
            .expect("parameter table entry");
        match entry.gene {
            Some(i) => entry.map(genome.0[i]),
            None => entry.lower,
        }
    }
}

/// Maps a genome to controller parameters for `mode`.
pub fn decode(genome: &Genome, mode: Mode) -> Result<ControllerParams> {
    let spec = ParamSpec::for_mode(mode);
    let v = |name: &str| spec.gene_value(genome, name);

    let coupling = match mode {
        Mode::OpenLoop => Coupling::OpenLoop {
            strength: v("coupling_strength"),
            leg_phases: WALK_LEG_PHASES,
        },
        Mode::ClosedLoop => Coupling::ClosedLoop {
            attraction: v("attraction"),
        },
    };
    let global = GlobalParams {
        frequency: v("frequency"),
        gain: v("gain"),
        duty: v("duty"),
        coupling,
    };
    let leg = LegParams {
        target_amp: [v("joint0_target_amp"), v("joint1_target_amp")],
        target_offset: [
            v("joint0_target_offset"),
            v("joint1_target_offset"),
            v("joint2_target_offset"),
        ],
        target_swing: v("joint2_target_swing"),
        target_stance: v("joint2_target_stance"),
        phase_shift: [v("joint1_phase_shift"), v("joint2_phase_shift")],
    };
    Ok(ControllerParams {
        global,
        legs: replicate_legs(&leg),
    })
}

/// Copies one leg's parameters to all four legs.
pub fn replicate_legs(leg: &LegParams) -> [LegParams; NUM_LEGS] {
    [*leg; NUM_LEGS]
}

/// On-disk genome: `{"mode": "closed_loop", "genes": [..10 numbers..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenomeFile {
    pub mode: Mode,
    pub genes: Genome,
}

impl GenomeFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn genes_with(index: usize, value: f64) -> Genome {
        let mut g = [0.5; GENOME_LEN];
        g[index] = value;
        Genome::new(g).unwrap()
    }

    #[test]
    fn midpoint_genes() {
        let p = decode(&genes_with(0, 0.5), Mode::OpenLoop).unwrap();
        assert_abs_diff_eq!(p.global.gain, 0.4, epsilon = 1e-15);
        let p = decode(&genes_with(5, 0.5), Mode::OpenLoop).unwrap();
        assert_abs_diff_eq!(p.legs[0].phase_shift[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn lower_bounds() {
        let zero = Genome::uniform(0.0).unwrap();
        for mode in [Mode::OpenLoop, Mode::ClosedLoop] {
            let p = decode(&zero, mode).unwrap();
            assert_eq!(p.global.gain, 0.2);
            assert_eq!(p.global.duty, 0.2);
            assert_eq!(p.global.frequency, 0.25);
            let leg = p.legs[0];
            assert_eq!(leg.target_amp, [0.0, 0.0]);
            assert_eq!(leg.target_offset, [0.18, 0.36, 0.85]);
            assert_eq!(leg.target_swing, 0.0);
            assert_eq!(leg.target_stance, 0.0);
            assert_abs_diff_eq!(leg.phase_shift[0], -0.2 * PI, epsilon = 1e-15);
            assert_abs_diff_eq!(leg.phase_shift[1], -0.2 * PI, epsilon = 1e-15);
        }
        match decode(&zero, Mode::ClosedLoop).unwrap().global.coupling {
            Coupling::ClosedLoop { attraction } => assert_eq!(attraction, 0.005),
            _ => panic!(),
        }
        match decode(&zero, Mode::OpenLoop).unwrap().global.coupling {
            Coupling::OpenLoop {
                strength,
                leg_phases,
            } => {
                assert_eq!(strength, 0.1);
                assert_eq!(leg_phases, [0.0, 0.5, 0.25, 0.75]);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn upper_bounds() {
        let one = Genome::uniform(1.0).unwrap();
        let p = decode(&one, Mode::ClosedLoop).unwrap();
        assert_eq!(p.global.gain, 0.6);
        assert_eq!(p.global.duty, 0.8);
        let leg = p.legs[0];
        assert_eq!(leg.target_amp[1], 0.3);
        assert_eq!(leg.target_offset, [0.18, 1.06, 1.55]);
        assert_eq!(leg.target_swing, 0.7);
        assert_eq!(leg.target_stance, 0.7);
        assert_abs_diff_eq!(leg.phase_shift[1], 0.2 * PI, epsilon = 1e-15);
        match p.global.coupling {
            Coupling::ClosedLoop { attraction } => assert_eq!(attraction, 0.1),
            _ => panic!(),
        }
    }

    #[test]
    fn rejects_out_of_box_and_wrong_length() {
        assert!(matches!(
            Genome::new([0.5, 0.5, 1.01, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]),
            Err(Error::GeneDomain { index: 2, .. })
        ));
        assert!(Genome::uniform(f64::NAN).is_err());
        assert!(matches!(
            Genome::from_slice(&[0.5; 9]),
            Err(Error::GenomeLength { expected: 10, got: 9 })
        ));
    }

    #[test]
    fn spec_has_ten_evolved_per_mode() {
        for mode in [Mode::OpenLoop, Mode::ClosedLoop] {
            let spec = ParamSpec::for_mode(mode);
            let evolved = spec.evolved();
            assert_eq!(evolved.len(), GENOME_LEN);
            for (i, e) in evolved.iter().enumerate() {
                assert_eq!(e.gene, Some(i));
                assert!(e.lower < e.upper);
            }
            for e in spec.entries.iter().filter(|e| !e.is_evolved()) {
                assert_eq!(e.lower, e.upper);
            }
        }
    }

    #[test]
    fn legs_are_identical_copies() {
        let g = Genome::new([0.1, 0.9, 0.3, 0.7, 0.2, 0.8, 0.4, 0.6, 0.05, 0.95]).unwrap();
        let p = decode(&g, Mode::ClosedLoop).unwrap();
        assert!(p.legs.iter().all(|l| *l == p.legs[0]));
        assert_eq!(replicate_legs(&p.legs[2]), p.legs);
    }

    #[test]
    fn genome_file_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.json");
        let file = GenomeFile {
            mode: Mode::ClosedLoop,
            genes: Genome::new([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]).unwrap(),
        };
        file.write(&path).unwrap();
        assert_eq!(GenomeFile::read(&path).unwrap(), file);

        std::fs::write(&path, "{\"mode\": \"open_loop\", \"genes\": [0.1, 0.2,\n 1.5, 0,0,0,0,0,0,0]}")
            .unwrap();
        let err = GenomeFile::read(&path).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
        std::fs::write(&path, "{\"mode\": \"open_loop\", \"genes\": [0.1, 0.2]}").unwrap();
        assert!(GenomeFile::read(&path).is_err());
    }

    proptest! {
        #[test]
        fn decode_is_monotone_per_gene(
            base in proptest::array::uniform10(0.0f64..=1.0),
            index in 0usize..GENOME_LEN,
            lo in 0.0f64..=1.0,
            hi in 0.0f64..=1.0,
        ) {
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            let mut a = base;
            let mut b = base;
            a[index] = lo;
            b[index] = hi;
            for mode in [Mode::OpenLoop, Mode::ClosedLoop] {
                let spec = ParamSpec::for_mode(mode);
                let entry = spec.evolved()[index];
                let pa = spec.gene_value(&Genome::new(a).unwrap(), entry.name);
                let pb = spec.gene_value(&Genome::new(b).unwrap(), entry.name);
                prop_assert!(pa <= pb);
                prop_assert!(pa >= entry.lower && pb <= entry.upper);
            }
        }

        #[test]
        fn modes_agree_on_shared_parameters(genes in proptest::array::uniform10(0.0f64..=1.0)) {
            let g = Genome::new(genes).unwrap();
            let open = decode(&g, Mode::OpenLoop).unwrap();
            let closed = decode(&g, Mode::ClosedLoop).unwrap();
            prop_assert_eq!(open.legs, closed.legs);
            prop_assert_eq!(open.global.gain, closed.global.gain);
            prop_assert_eq!(open.global.duty, closed.global.duty);
            prop_assert_eq!(open.global.frequency, closed.global.frequency);
        }
    }
}
