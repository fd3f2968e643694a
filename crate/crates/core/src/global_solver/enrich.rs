use super::cover::Cover;
use crate::crack::CrackPath;
use crate::geom::{vec2, Rect, Vec2};

/// Smallest share of a patch support that must lie on each side of the
/// crack for the step enrichment to be kept.
pub const MIN_SIDE_FRACTION: f64 = 1e-4;

/// Samples per direction when measuring side fractions.
const SIDE_SAMPLES: usize = 100;

/// Step function across the crack, faded out linearly over `ramp`
/// behind the tip so that it vanishes ahead of the tip.
#[derive(Debug, Clone, PartialEq)]
pub struct StepEnrichment {
    pub crack: CrackPath,
    pub tip: Vec2,
    pub direction: Vec2,
    pub ramp: f64,
}

impl StepEnrichment {
    pub fn new(crack: &CrackPath, ramp: f64) -> StepEnrichment {
        StepEnrichment {
            crack: crack.clone(),
            tip: crack.tip(),
            direction: crack.tip_direction(),
            ramp,
        }
    }

    /// Fade factor and its gradient.
    pub fn fade(&self, p: &Vec2) -> (f64, Vec2) {
        let s = (self.tip - p).dot(&self.direction) / self.ramp;
        if s >= 1.0 {
            (1.0, Vec2::zeros())
        } else if s <= 0.0 {
            (0.0, Vec2::zeros())
        } else {
            (s, -self.direction / self.ramp)
        }
    }

    /// Whether the fade is identically 1 on the rectangle.
    pub fn fully_behind(&self, r: &Rect) -> bool {
        [r.min, r.max, vec2(r.min.x, r.max.y), vec2(r.max.x, r.min.y)]
            .iter()
            .all(|c| (self.tip - c).dot(&self.direction) >= self.ramp)
    }

    /// Value and gradient. `sign` overrides the side test; without it a
    /// point on the crack yields `None`.
    pub fn eval(&self, p: &Vec2, sign: Option<f64>) -> Option<(f64, Vec2)> {
        let (f, g) = self.fade(p);
        if f == 0.0 {
            return Some((0.0, Vec2::zeros()));
        }
        let s = match sign {
            Some(s) => s,
            None => self.crack.side(p)?,
        };
        Some((s * f, s * g))
    }
}

/// Local approximation space of one patch: the bilinear polynomials
/// `1, xi, eta, xi*eta` plus the listed enrichments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalSpace {
    pub enrichments: Vec<usize>,
}

impl LocalSpace {
    pub const POLY: usize = 4;

    pub fn n_functions(&self) -> usize {
        Self::POLY + self.enrichments.len()
    }
}

/// Per-patch local spaces together with the enrichment functions they
/// refer to.
#[derive(Debug, Clone, PartialEq)]
pub struct EnrichedSpace {
    pub enrichments: Vec<StepEnrichment>,
    pub spaces: Vec<LocalSpace>,
}

impl EnrichedSpace {
    pub fn plain(cover: &Cover) -> EnrichedSpace {
        EnrichedSpace {
            enrichments: Vec::new(),
            spaces: vec![LocalSpace::default(); cover.len()],
        }
    }

    pub fn crack(&self) -> Option<&CrackPath> {
        self.enrichments.first().map(|e| &e.crack)
    }

    pub fn n_enriched(&self) -> usize {
        self.spaces.iter().filter(|s| !s.enrichments.is_empty()).count()
    }
}

/// Attaches the crack step function to every patch whose support meets
/// the crack and has material on both sides of it.
pub fn enrich_cracked_patches(cover: &Cover, crack: Option<&CrackPath>) -> EnrichedSpace {
    let mut space = EnrichedSpace::plain(cover);
    let Some(crack) = crack else {
        return space;
    };
    let r = 0.5 * cover.alpha * cover.h;
    let step = StepEnrichment::new(crack, r);
    for (k, patch) in cover.patches.iter().enumerate() {
        if !crack.intersects_rect(&patch.rect) {
            continue;
        }
        if side_fraction(cover, &step, &patch.rect) >= MIN_SIDE_FRACTION {
            space.spaces[k].enrichments.push(0);
        }
    }
    space.enrichments.push(step);
    space
}

/// Smaller of the two shares of the support (inside the material) where
/// the enrichment is positive or negative.
fn side_fraction(cover: &Cover, step: &StepEnrichment, rect: &Rect) -> f64 {
    let n = SIDE_SAMPLES;
    let (mut pos, mut neg) = (0usize, 0usize);
    for j in 0..n {
        for i in 0..n {
            let p = vec2(
                rect.min.x + (i as f64 + 0.5) / n as f64 * rect.width(),
                rect.min.y + (j as f64 + 0.5) / n as f64 * rect.height(),
            );
            if !cover.domain.contains(&p) {
                continue;
            }
            match step.eval(&p, None) {
                Some((v, _)) if v > 0.0 => pos += 1,
                Some((v, _)) if v < 0.0 => neg += 1,
                _ => {}
            }
        }
    }
    pos.min(neg) as f64 / (n * n) as f64
}
