//! Deterministic synthetic skeleton sequences.
//!
//! Each class oscillates a class-specific set of joints around a Kinect-v2
//! style rest pose. Subjects get their own limb proportions, amplitude and
//! phase; trials add tempo jitter and per-coordinate sensor noise.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ActionSequence, SkeletonError, SkeletonFrame};

/// Rest pose for the 25 Kinect v2 joints, in meters (x right, y up, z toward
/// the sensor). Order: spine base, spine mid, neck, head, left shoulder,
/// elbow, wrist, hand, right shoulder, elbow, wrist, hand, left hip, knee,
/// ankle, foot, right hip, knee, ankle, foot, spine shoulder, left hand tip,
/// left thumb, right hand tip, right thumb.
pub const KINECT_V2_TEMPLATE: [[f64; 3]; 25] = [
    [0.00, 0.00, 0.00],
    [0.00, 0.30, -0.02],
    [0.00, 0.60, 0.00],
    [0.00, 0.75, 0.04],
    [-0.18, 0.52, -0.03],
    [-0.25, 0.27, 0.02],
    [-0.27, 0.05, 0.08],
    [-0.28, -0.03, 0.10],
    [0.18, 0.52, -0.03],
    [0.25, 0.27, 0.02],
    [0.27, 0.05, 0.08],
    [0.28, -0.03, 0.10],
    [-0.09, -0.02, -0.02],
    [-0.10, -0.45, 0.04],
    [-0.10, -0.85, -0.03],
    [-0.10, -0.90, 0.10],
    [0.09, -0.02, -0.02],
    [0.10, -0.45, 0.04],
    [0.10, -0.85, -0.03],
    [0.10, -0.90, 0.10],
    [0.00, 0.52, -0.01],
    [-0.29, -0.11, 0.12],
    [-0.25, -0.05, 0.14],
    [0.29, -0.11, 0.12],
    [0.25, -0.05, 0.14],
];

/// Displacement of one joint from the rest pose: a held offset plus a sinusoid,
/// `weight * (offset[a] + amplitude[a] * sin(2π * cycles * f / (F-1) + phase + axis_phase[a]))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointOscillation {
    pub joint: usize,
    pub weight: f64,
    #[serde(default)]
    pub offset: [f64; 3],
    pub amplitude: [f64; 3],
    pub axis_phase: [f64; 3],
    pub cycles: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMotion {
    pub name: String,
    pub oscillations: Vec<JointOscillation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: Vec<ClassMotion>,
    /// Relative per-subject jitter of limb offsets from the rest pose.
    pub proportion_jitter: f64,
    /// Relative per-subject jitter of motion amplitude.
    pub amplitude_jitter: f64,
    /// Per-subject phase jitter, radians (uniform in `±phase_jitter`).
    pub phase_jitter: f64,
    /// Relative per-trial tempo jitter.
    pub tempo_jitter: f64,
    /// Standard deviation of additive coordinate noise, meters.
    pub noise_std: f64,
}

const RIGHT_ARM: [(usize, f64); 6] = [(9, 0.4), (10, 0.8), (11, 1.0), (23, 1.0), (24, 1.0), (8, 0.1)];
const LEFT_ARM: [(usize, f64); 6] = [(5, 0.4), (6, 0.8), (7, 1.0), (21, 1.0), (22, 1.0), (4, 0.1)];
const RIGHT_LEG: [(usize, f64); 3] = [(17, 0.5), (18, 1.0), (19, 1.0)];
const UPPER_BODY: [(usize, f64); 5] = [(1, 0.3), (20, 0.6), (2, 0.7), (3, 1.0), (8, 0.6)];

fn limb(
    joints: &[(usize, f64)],
    offset: [f64; 3],
    amplitude: [f64; 3],
    axis_phase: [f64; 3],
    cycles: f64,
) -> Vec<JointOscillation> {
    joints
        .iter()
        .map(|&(joint, weight)| JointOscillation {
            joint,
            weight,
            offset,
            amplitude,
            axis_phase,
            cycles,
        })
        .collect()
}

fn base_motion(k: usize) -> (&'static str, Vec<JointOscillation>) {
    const Q: f64 = std::f64::consts::FRAC_PI_2;
    match k % 8 {
        0 => (
            "right_wave",
            limb(&RIGHT_ARM, [0.15, 0.55, 0.0], [0.25, 0.30, 0.0], [0.0; 3], 2.0),
        ),
        1 => (
            "left_punch",
            limb(&LEFT_ARM, [0.10, 0.25, 0.25], [0.0, 0.05, 0.40], [0.0; 3], 1.5),
        ),
        2 => {
            let mut v = limb(&LEFT_ARM, [0.24, 0.30, 0.35], [0.12, 0.0, 0.10], [0.0; 3], 3.0);
            v.extend(limb(&RIGHT_ARM, [-0.24, 0.30, 0.35], [-0.12, 0.0, 0.10], [0.0; 3], 3.0));
            ("clap", v)
        }
        3 => (
            "right_kick",
            limb(&RIGHT_LEG, [0.0, 0.10, 0.25], [0.0, 0.20, 0.35], [0.0; 3], 1.0),
        ),
        4 => (
            "right_circle",
            limb(&RIGHT_ARM, [0.20, 0.30, 0.10], [0.20, 0.20, 0.0], [0.0, Q, 0.0], 2.0),
        ),
        5 => (
            "bow",
            limb(&UPPER_BODY, [0.0, -0.05, 0.20], [0.0, -0.10, 0.30], [0.0; 3], 1.0),
        ),
        6 => (
            "left_wave",
            limb(&LEFT_ARM, [-0.15, 0.55, 0.0], [-0.25, 0.30, 0.0], [0.0; 3], 2.5),
        ),
        _ => {
            let mut v = limb(&RIGHT_ARM, [0.0, 0.20, 0.05], [0.0, 0.35, 0.10], [0.0; 3], 1.0);
            v.extend(limb(&LEFT_ARM, [0.0, 0.20, 0.05], [0.0, 0.35, 0.10], [0.0; 3], 1.0));
            ("arms_raise", v)
        }
    }
}

impl SynthSpec {
    /// `num_classes` clearly distinct motions with modest subject variation.
    /// Beyond eight classes the base motions repeat at higher tempo.
    pub fn well_separated(num_classes: usize) -> Self {
        let classes = (0..num_classes)
            .map(|k| {
                let (name, mut osc) = base_motion(k);
                let tempo = 1.0 + (k / 8) as f64 * 0.75;
                for o in &mut osc {
                    o.cycles *= tempo;
                }
                ClassMotion {
                    name: format!("{name}_{k}"),
                    oscillations: osc,
                }
            })
            .collect();
        Self {
            classes,
            proportion_jitter: 0.08,
            amplitude_jitter: 0.15,
            phase_jitter: 0.4,
            tempo_jitter: 0.08,
            noise_std: 0.004,
        }
    }

    fn check(&self) -> Result<(), String> {
        if self.classes.len() < 2 {
            return Err(format!("need at least 2 classes, got {}", self.classes.len()));
        }
        let jitters = [
            self.proportion_jitter,
            self.amplitude_jitter,
            self.phase_jitter,
            self.tempo_jitter,
            self.noise_std,
        ];
        if jitters.iter().any(|j| !j.is_finite() || *j < 0.0) {
            return Err("jitter and noise parameters must be finite and non-negative".into());
        }
        if self.tempo_jitter >= 1.0 || self.amplitude_jitter >= 1.0 {
            return Err("tempo and amplitude jitter must be below 1".into());
        }
        for c in &self.classes {
            if c.oscillations.is_empty() {
                return Err(format!("class {:?} has no moving joints", c.name));
            }
            for o in &c.oscillations {
                if o.joint >= KINECT_V2_TEMPLATE.len() {
                    return Err(format!("class {:?}: joint {} out of range", c.name, o.joint));
                }
                let vals = o
                    .offset
                    .iter()
                    .chain(&o.amplitude)
                    .chain(&o.axis_phase)
                    .chain([&o.weight, &o.cycles]);
                if vals.into_iter().any(|v| !v.is_finite()) {
                    return Err(format!("class {:?}: non-finite motion parameter", c.name));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
}

struct SubjectStyle {
    rest: Vec<[f64; 3]>,
    amplitude: f64,
    phase: f64,
}

/// Generates `C * subjects * trials` sequences (subject-major, then class,
/// then trial) of `frames` frames each. Subjects are named `s1..`, trials `t1..`.
///
/// A pure function of its arguments.
pub fn synth_generate(
    spec: &SynthSpec,
    subjects: usize,
    trials: usize,
    frames: usize,
    seed: u64,
) -> Result<Vec<ActionSequence>, SynthError> {
    spec.check().map_err(SynthError::InvalidSpec)?;
    if subjects == 0 || trials == 0 {
        return Err(SynthError::InvalidSpec("subjects and trials must be positive".into()));
    }
    if frames <= super::MIN_FRAMES_EXCLUSIVE {
        return Err(SynthError::InvalidSpec(format!(
            "need more than 2 frames, got {frames}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
    let mut out = Vec::with_capacity(spec.classes.len() * subjects * trials);

    for s in 0..subjects {
        let style = SubjectStyle {
            rest: KINECT_V2_TEMPLATE
                .iter()
                .map(|p| {
                    let scale = 1.0 + spec.proportion_jitter * rng.random_range(-1.0..=1.0);
                    [p[0] * scale, p[1] * scale, p[2] * scale]
                })
                .collect(),
            amplitude: 1.0 + spec.amplitude_jitter * rng.random_range(-1.0..=1.0),
            phase: spec.phase_jitter * rng.random_range(-1.0..=1.0),
        };
        for (label, class) in spec.classes.iter().enumerate() {
            for t in 0..trials {
                let tempo = 1.0 + spec.tempo_jitter * rng.random_range(-1.0..=1.0);
                let trial_phase = 0.25 * spec.phase_jitter * rng.random_range(-1.0..=1.0);
                let mut seq_frames = Vec::with_capacity(frames);
                for f in 0..frames {
                    let progress = f as f64 / (frames - 1) as f64;
                    let mut pose = style.rest.clone();
                    for o in &class.oscillations {
                        let base = TAU * o.cycles * tempo * progress + style.phase + trial_phase;
                        for (a, p) in pose[o.joint].iter_mut().enumerate() {
                            *p += o.weight
                                * style.amplitude
                                * (o.offset[a] + o.amplitude[a] * (base + o.axis_phase[a]).sin());
                        }
                    }
                    let coords = pose
                        .iter()
                        .flat_map(|p| p.iter())
                        .map(|&c| (c + noise.sample(&mut rng)) as f32)
                        .collect();
                    seq_frames.push(SkeletonFrame::new(f, 3, coords)?);
                }
                out.push(ActionSequence::new(
                    format!("s{}", s + 1),
                    label,
                    format!("t{}", t + 1),
                    seq_frames,
                )?);
            }
        }
    }
    Ok(out)
}
