//! Synthetic gaze sessions and detection scoring.
//!
//! When a page appears the simulated user is still looking at the robot's
//! face for `return_delay_s`, then reads the page on the tablet for a
//! log-normally distributed time, then (with probability `shift_to_face`) looks at the
//! robot's face for `face_hold_s` before the next page appears. Pages without
//! a shift last `page_timeout_s`.
//!
//! Estimator error is modelled as a hit/miss process per sample: a hit aims
//! at the fixated region with Gaussian angular noise (kept inside the region),
//! a miss aims at a point drawn once per miss episode, either inside the other
//! AOI (`cross_leak`) or anywhere outside the fixated region within a frame of
//! width `miss_margin_mm` around it (which may overlap the other AOI). The stationary hit rate equals the configured TPR; the
//! lag-one correlation of the hit/miss sequence is `error_correlation`
//! (0 gives independent Bernoulli thinning).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aoi::{AoiLabel, AoiLayout, AoiRect};
use crate::detector::{EngagementState, TransitionCause, TransitionEvent};
use crate::geometry::{EulerGaze, GeometryError, Point2D, SceneCalibration};
use crate::sessionio::quantize_degrees;
use crate::smoothing::GazeSample;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("invalid behaviour profile: {0}")]
    Profile(String),
    #[error("n_pages must be at least 1")]
    NoPages,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorProfile {
    pub return_delay_s: f64,
    pub read_median_s: f64,
    pub read_sigma: f64,
    pub shift_to_face: f64,
    /// Brief looks at the face while still reading, per second of reading.
    pub glance_rate_hz: f64,
    /// Mean glance length; each glance lasts uniformly 0.5–1.5× this.
    pub glance_s: f64,
    pub face_hold_s: f64,
    pub page_timeout_s: f64,
    pub tablet_tpr: f64,
    pub face_tpr: f64,
    pub cross_leak: f64,
    pub error_correlation: f64,
    pub miss_margin_mm: f64,
    pub angular_noise_sd_deg: f64,
    pub sample_rate_hz: f64,
    pub seed: u64,
}

impl Default for BehaviorProfile {
    /// Pretest hit rates (tablet 0.4, face 0.5); reading times that keep most
    /// pages well inside the 10 s failsafe.
    fn default() -> Self {
        Self {
            return_delay_s: 0.0,
            read_median_s: 4.0,
            read_sigma: 0.3,
            shift_to_face: 1.0,
            glance_rate_hz: 0.0,
            glance_s: 0.6,
            face_hold_s: 4.0,
            page_timeout_s: 10.0,
            tablet_tpr: 0.4,
            face_tpr: 0.5,
            cross_leak: 0.0,
            error_correlation: 0.0,
            miss_margin_mm: 200.0,
            angular_noise_sd_deg: 1.0,
            sample_rate_hz: 5.0,
            seed: 0,
        }
    }
}

impl BehaviorProfile {
    /// Deterministic, error-free user.
    pub fn noiseless() -> Self {
        Self {
            read_sigma: 0.0,
            tablet_tpr: 1.0,
            face_tpr: 1.0,
            angular_noise_sd_deg: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        let fail = |m: String| Err(SimulationError::Profile(m));
        for (name, p) in [
            ("shift_to_face", self.shift_to_face),
            ("tablet_tpr", self.tablet_tpr),
            ("face_tpr", self.face_tpr),
            ("cross_leak", self.cross_leak),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if !(0.0..1.0).contains(&self.error_correlation) {
            return fail(format!(
                "error_correlation must be in [0, 1), got {}",
                self.error_correlation
            ));
        }
        for (name, v) in [
            ("read_median_s", self.read_median_s),
            ("face_hold_s", self.face_hold_s),
            ("page_timeout_s", self.page_timeout_s),
            ("sample_rate_hz", self.sample_rate_hz),
            ("miss_margin_mm", self.miss_margin_mm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return fail(format!("{name} must be > 0, got {v}"));
            }
        }
        for (name, v) in [
            ("return_delay_s", self.return_delay_s),
            ("glance_rate_hz", self.glance_rate_hz),
            ("glance_s", self.glance_s),
            ("read_sigma", self.read_sigma),
            ("angular_noise_sd_deg", self.angular_noise_sd_deg),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return fail(format!("{name} must be >= 0, got {v}"));
            }
        }
        Ok(())
    }
}

/// A stretch of time during which the user looks at one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub target: AoiLabel,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedPage {
    pub start: f64,
    pub end: f64,
    /// When the user turned from the tablet to the face, if they did.
    pub shift_time: Option<f64>,
    pub fixations: Vec<Fixation>,
}

/// Ground truth for a simulated session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedSession {
    pub pages: Vec<ScriptedPage>,
}

impl ScriptedSession {
    pub fn shift_times(&self) -> Vec<Option<f64>> {
        self.pages.iter().map(|p| p.shift_time).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Simulator {
    profile: BehaviorProfile,
    calibration: SceneCalibration,
    layout: AoiLayout,
}

struct MissProcess {
    missing: bool,
    point: Point2D,
}

impl Simulator {
    pub fn new(
        profile: BehaviorProfile,
        calibration: SceneCalibration,
        layout: AoiLayout,
    ) -> Result<Self, SimulationError> {
        profile.validate()?;
        Ok(Self {
            profile,
            calibration,
            layout,
        })
    }

    pub fn profile(&self) -> &BehaviorProfile {
        &self.profile
    }

    /// Generates one session of `n_pages` pages. Identical inputs give
    /// identical output.
    pub fn generate_session(
        &self,
        n_pages: usize,
    ) -> Result<(Vec<GazeSample>, ScriptedSession), SimulationError> {
        if n_pages == 0 {
            return Err(SimulationError::NoPages);
        }
        let p = &self.profile;
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let period = 1.0 / p.sample_rate_hz;
        let timestamp = |k: u64| k as f64 / p.sample_rate_hz;

        let read_dist = if p.read_sigma > 0.0 {
            Some(LogNormal::new(p.read_median_s.ln(), p.read_sigma).expect("validated sigma"))
        } else {
            None
        };

        let mut pages = Vec::with_capacity(n_pages);
        let mut page_start = 0.0;
        for _ in 0..n_pages {
            let read = read_dist
                .as_ref()
                .map_or(p.read_median_s, |d| d.sample(&mut rng))
                .max(period);
            let shifts = rng.random::<f64>() < p.shift_to_face;
            let timeout_at = page_start + p.page_timeout_s;
            let reading_from = (page_start + p.return_delay_s).min(timeout_at);
            let mut fixations = Vec::with_capacity(3);
            if reading_from > page_start {
                fixations.push(Fixation {
                    target: AoiLabel::Face,
                    start: page_start,
                    end: reading_from,
                });
            }
            let shift = reading_from + read;
            let page = if shifts && shift < timeout_at {
                let end = (shift + p.face_hold_s).min(timeout_at);
                self.reading(reading_from, shift, &mut fixations, &mut rng);
                fixations.push(Fixation {
                    target: AoiLabel::Face,
                    start: shift,
                    end,
                });
                ScriptedPage {
                    start: page_start,
                    end,
                    shift_time: Some(shift),
                    fixations,
                }
            } else {
                if timeout_at > reading_from {
                    self.reading(reading_from, timeout_at, &mut fixations, &mut rng);
                }
                ScriptedPage {
                    start: page_start,
                    end: timeout_at,
                    shift_time: None,
                    fixations,
                }
            };
            page_start = page.end;
            pages.push(page);
        }

        let mut samples = Vec::new();
        let mut miss = MissProcess {
            missing: false,
            point: Point2D::new(0.0, 0.0),
        };
        let mut current_target = None;
        let mut k = 0u64;
        for fixation in pages.iter().flat_map(|page| page.fixations.iter()) {
            loop {
                let t = timestamp(k);
                if t >= fixation.end {
                    break;
                }
                if t >= fixation.start {
                    if current_target != Some(fixation.target) {
                        // A new fixation target invalidates the held miss point.
                        current_target = Some(fixation.target);
                        if miss.missing {
                            miss.point = self.draw_miss_point(fixation.target, &mut rng);
                        }
                    }
                    let gaze = self.sample_gaze(fixation.target, &mut miss, &mut rng)?;
                    samples.push(GazeSample::new(t, gaze).with_frame(k));
                }
                k += 1;
            }
        }
        Ok((samples, ScriptedSession { pages }))
    }

    /// Tablet fixation over `[start, end)`, interrupted by glances at the face.
    fn reading(&self, start: f64, end: f64, fixations: &mut Vec<Fixation>, rng: &mut ChaCha8Rng) {
        let p = &self.profile;
        let mut t = start;
        if p.glance_rate_hz > 0.0 {
            let gap = rand_distr::Exp::new(p.glance_rate_hz).expect("validated rate");
            loop {
                let glance_start = t + gap.sample(rng);
                let glance_end = glance_start + p.glance_s * rng.random_range(0.5..1.5);
                if glance_end >= end {
                    break;
                }
                fixations.push(Fixation {
                    target: AoiLabel::Tablet,
                    start: t,
                    end: glance_start,
                });
                fixations.push(Fixation {
                    target: AoiLabel::Face,
                    start: glance_start,
                    end: glance_end,
                });
                t = glance_end;
            }
        }
        fixations.push(Fixation {
            target: AoiLabel::Tablet,
            start: t,
            end,
        });
    }

    fn tpr(&self, target: AoiLabel) -> f64 {
        match target {
            AoiLabel::Tablet => self.profile.tablet_tpr,
            AoiLabel::Face => self.profile.face_tpr,
            AoiLabel::Elsewhere => 0.0,
        }
    }

    fn other_region(&self, target: AoiLabel) -> Option<&AoiRect> {
        match target {
            AoiLabel::Tablet => Some(self.layout.face()),
            AoiLabel::Face => Some(self.layout.tablet()),
            AoiLabel::Elsewhere => None,
        }
    }

    fn sample_gaze(
        &self,
        target: AoiLabel,
        miss: &mut MissProcess,
        rng: &mut ChaCha8Rng,
    ) -> Result<EulerGaze, SimulationError> {
        let miss_rate = 1.0 - self.tpr(target);
        let rho = self.profile.error_correlation;
        let p_miss = if miss.missing {
            rho + (1.0 - rho) * miss_rate
        } else {
            (1.0 - rho) * miss_rate
        };
        let missing = rng.random::<f64>() < p_miss;
        if missing && !miss.missing {
            miss.point = self.draw_miss_point(target, rng);
        }
        miss.missing = missing;

        let rect = self.layout.rect(target).copied();
        if missing {
            // Noise must not carry a miss back into the fixated region.
            let accept = |p: Point2D| rect.is_none_or(|r| !r.contains(p));
            self.noisy_aim(miss.point, accept, rng)
        } else {
            let center = rect.map_or(Point2D::new(0.0, 0.0), |r| r.center());
            let accept = |p: Point2D| rect.is_none_or(|r| r.contains(p));
            self.noisy_aim(center, accept, rng)
        }
    }

    /// Aims at `point` with Gaussian angular noise, resampling the noise until
    /// the projected sample satisfies `accept`. Falls back to the noiseless aim.
    fn noisy_aim(
        &self,
        point: Point2D,
        accept: impl Fn(Point2D) -> bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<EulerGaze, SimulationError> {
        let aim = self.calibration.aim_at(point)?;
        let sd = self.profile.angular_noise_sd_deg;
        if sd > 0.0 {
            let noise = Normal::new(0.0, sd).expect("validated sd");
            for _ in 0..16 {
                let yaw = aim.yaw_degrees() + noise.sample(rng);
                let pitch = aim.pitch_degrees() + noise.sample(rng);
                let Ok(gaze) = quantized(yaw, pitch) else {
                    continue;
                };
                if let Ok(p) = self.calibration.project(&gaze) {
                    if accept(p) {
                        return Ok(gaze);
                    }
                }
            }
        }
        Ok(quantized(aim.yaw_degrees(), aim.pitch_degrees())?)
    }

    fn draw_miss_point(&self, target: AoiLabel, rng: &mut ChaCha8Rng) -> Point2D {
        if let Some(other) = self.other_region(target) {
            if rng.random::<f64>() < self.profile.cross_leak {
                return uniform_in(other, rng);
            }
        }
        let Some(rect) = self.layout.rect(target) else {
            return Point2D::new(0.0, 0.0);
        };
        let outer = rect
            .expanded(self.profile.miss_margin_mm)
            .expect("positive margin keeps the rect valid");
        // The nearest complement of the target: the other AOI may be hit.
        let blocked = |p: Point2D| rect.contains(p);
        for _ in 0..1000 {
            let p = uniform_in(&outer, rng);
            if !blocked(p) {
                return p;
            }
        }
        Point2D::new(outer.x_max() + 1.0, outer.center().y)
    }
}

fn uniform_in(rect: &AoiRect, rng: &mut ChaCha8Rng) -> Point2D {
    Point2D::new(
        rng.random_range(rect.x_min()..rect.x_max()),
        rng.random_range(rect.y_min()..rect.y_max()),
    )
}

/// Angles as they appear in a sample log: degrees rounded to 1e-6.
fn quantized(yaw_deg: f64, pitch_deg: f64) -> Result<EulerGaze, GeometryError> {
    EulerGaze::from_degrees(quantize_degrees(yaw_deg), quantize_degrees(pitch_deg))
}

/// Convenience wrapper around [`Simulator::generate_session`].
pub fn generate_session(
    profile: &BehaviorProfile,
    calibration: &SceneCalibration,
    layout: &AoiLayout,
    n_pages: usize,
) -> Result<(Vec<GazeSample>, ScriptedSession), SimulationError> {
    Simulator::new(profile.clone(), *calibration, *layout)?.generate_session(n_pages)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Correct,
    Early,
    Late,
    Missed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PageOutcome {
    pub page: usize,
    pub outcome: Outcome,
    /// First gaze-cause disengagement inside the page, if any.
    pub detection_time: Option<f64>,
    /// `detection_time - shift_time` for correct and late pages.
    pub latency: Option<f64>,
}

/// Scores each scripted page against the detected page turns that fall
/// inside it.
///
/// * no gaze-cause turn, or a timeout before the first one: `Missed`;
/// * first gaze turn before the shift, any gaze turn on a page without a
///   shift, or a second gaze turn on the same page (which would flip the
///   following page unread): `Early`;
/// * first gaze turn within `[shift, shift + tolerance]`: `Correct`;
/// * later than that: `Late`.
pub fn evaluate_detection(
    truth: &ScriptedSession,
    events: &[TransitionEvent],
    tolerance_s: f64,
) -> Vec<PageOutcome> {
    truth
        .pages
        .iter()
        .enumerate()
        .map(|(page, p)| {
            let turns: Vec<&TransitionEvent> = events
                .iter()
                .filter(|e| {
                    e.to_state == EngagementState::Disengaged
                        && e.timestamp >= p.start
                        && e.timestamp < p.end
                })
                .collect();
            let gaze: Vec<f64> = turns
                .iter()
                .filter(|e| e.cause == TransitionCause::Gaze)
                .map(|e| e.timestamp)
                .collect();
            let first_timeout = turns
                .iter()
                .find(|e| e.cause == TransitionCause::Timeout)
                .map(|e| e.timestamp);

            let Some(&first) = gaze.first() else {
                return PageOutcome {
                    page,
                    outcome: Outcome::Missed,
                    detection_time: None,
                    latency: None,
                };
            };
            let missed = first_timeout.is_some_and(|t| t < first);
            let (outcome, latency) = match p.shift_time {
                _ if missed => (Outcome::Missed, None),
                None => (Outcome::Early, None),
                Some(shift) if first < shift => (Outcome::Early, None),
                Some(_) if gaze.len() > 1 => (Outcome::Early, None),
                Some(shift) if first <= shift + tolerance_s => {
                    (Outcome::Correct, Some(first - shift))
                }
                Some(shift) => (Outcome::Late, Some(first - shift)),
            };
            PageOutcome {
                page,
                outcome,
                detection_time: Some(first),
                latency,
            }
        })
        .collect()
}

/// Tally of page outcomes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct OutcomeCounts {
    pub pages: usize,
    pub correct: usize,
    pub early: usize,
    pub late: usize,
    pub missed: usize,
    #[serde(skip)]
    latency_sum: f64,
    #[serde(skip)]
    latency_count: usize,
}

impl OutcomeCounts {
    pub fn from_outcomes(outcomes: &[PageOutcome]) -> Self {
        let mut counts = Self::default();
        for o in outcomes {
            counts.pages += 1;
            match o.outcome {
                Outcome::Correct => counts.correct += 1,
                Outcome::Early => counts.early += 1,
                Outcome::Late => counts.late += 1,
                Outcome::Missed => counts.missed += 1,
            }
            if let Some(l) = o.latency {
                counts.latency_sum += l;
                counts.latency_count += 1;
            }
        }
        counts
    }

    pub fn merge(&mut self, other: &OutcomeCounts) {
        self.pages += other.pages;
        self.correct += other.correct;
        self.early += other.early;
        self.late += other.late;
        self.missed += other.missed;
        self.latency_sum += other.latency_sum;
        self.latency_count += other.latency_count;
    }

    /// Timing-aware accuracy: correct pages over all pages.
    pub fn accuracy(&self) -> Option<f64> {
        (self.pages > 0).then(|| self.correct as f64 / self.pages as f64)
    }

    /// Mean shift-to-detection latency over correct and late pages.
    pub fn mean_latency(&self) -> Option<f64> {
        (self.latency_count > 0).then(|| self.latency_sum / self.latency_count as f64)
    }
}

/// Share of page turns advanced by a gaze-cause disengagement, pooled over
/// all given sessions. `None` when there were no turns.
pub fn success_rate<'a, I>(sessions: I) -> Option<f64>
where
    I: IntoIterator<Item = &'a [TransitionEvent]>,
{
    let (gaze, total) = sessions
        .into_iter()
        .flatten()
        .filter(|e| e.is_disengagement())
        .fold((0usize, 0usize), |(g, n), e| {
            (g + usize::from(e.cause == TransitionCause::Gaze), n + 1)
        });
    (total > 0).then(|| gaze as f64 / total as f64)
}
