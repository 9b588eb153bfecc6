use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Envelope element kinds carrying a U-factor, in index order 0..=6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UWallKind {
    Intwall,
    Floor,
    Outwall,
    Roof,
    Ceiling,
    Groundfloor,
    Window,
}

impl UWallKind {
    pub const ALL: [UWallKind; 7] = [
        UWallKind::Intwall,
        UWallKind::Floor,
        UWallKind::Outwall,
        UWallKind::Roof,
        UWallKind::Ceiling,
        UWallKind::Groundfloor,
        UWallKind::Window,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            UWallKind::Intwall => "intwall",
            UWallKind::Floor => "floor",
            UWallKind::Outwall => "outwall",
            UWallKind::Roof => "roof",
            UWallKind::Ceiling => "ceiling",
            UWallKind::Groundfloor => "groundfloor",
            UWallKind::Window => "window",
        }
    }

    /// Sampling interval in W/(m²·°C), taken from DOE reference buildings.
    pub fn default_bounds(self) -> (f64, f64) {
        match self {
            UWallKind::Intwall => (0.774, 6.299),
            UWallKind::Floor => (0.386, 3.145),
            UWallKind::Outwall => (0.269, 2.191),
            UWallKind::Roof => (0.160, 1.304),
            UWallKind::Ceiling => (0.386, 3.145),
            UWallKind::Groundfloor => (0.386, 3.145),
            UWallKind::Window => (1.950, 3.622),
        }
    }
}

/// U-factors (W/(m²·°C)) for the seven envelope element kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UWallVector {
    pub intwall: f64,
    pub floor: f64,
    pub outwall: f64,
    pub roof: f64,
    pub ceiling: f64,
    pub groundfloor: f64,
    pub window: f64,
}

impl UWallVector {
    pub fn from_array(v: [f64; 7]) -> Self {
        Self {
            intwall: v[0],
            floor: v[1],
            outwall: v[2],
            roof: v[3],
            ceiling: v[4],
            groundfloor: v[5],
            window: v[6],
        }
    }

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.intwall,
            self.floor,
            self.outwall,
            self.roof,
            self.ceiling,
            self.groundfloor,
            self.window,
        ]
    }

    pub fn get(&self, kind: UWallKind) -> f64 {
        self.to_array()[kind.index()]
    }

    pub fn with(&self, kind: UWallKind, value: f64) -> Self {
        let mut a = self.to_array();
        a[kind.index()] = value;
        Self::from_array(a)
    }

    /// Midpoint of every default interval.
    pub fn midpoint() -> Self {
        let mut a = [0.0; 7];
        for k in UWallKind::ALL {
            let (lo, hi) = k.default_bounds();
            a[k.index()] = 0.5 * (lo + hi);
        }
        Self::from_array(a)
    }

    pub fn validate(&self, bounds: &UWallBounds) -> Result<()> {
        for k in UWallKind::ALL {
            let v = self.get(k);
            let (lo, hi) = bounds.get(k);
            if !(v.is_finite() && v >= lo && v <= hi) {
                return Err(Error::Validation(format!(
                    "U-value '{}' = {v} outside [{lo}, {hi}]",
                    k.name()
                )));
            }
        }
        Ok(())
    }
}

/// Per-kind closed sampling intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UWallBounds {
    lo: [f64; 7],
    hi: [f64; 7],
}

impl Default for UWallBounds {
    fn default() -> Self {
        let mut lo = [0.0; 7];
        let mut hi = [0.0; 7];
        for k in UWallKind::ALL {
            (lo[k.index()], hi[k.index()]) = k.default_bounds();
        }
        Self { lo, hi }
    }
}

impl UWallBounds {
    pub fn new(lo: UWallVector, hi: UWallVector) -> Result<Self> {
        let (lo, hi) = (lo.to_array(), hi.to_array());
        for k in UWallKind::ALL {
            let (a, b) = (lo[k.index()], hi[k.index()]);
            if !(a.is_finite() && b.is_finite() && a > 0.0 && a <= b) {
                return Err(Error::Validation(format!(
                    "bad interval for '{}': [{a}, {b}]",
                    k.name()
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// Zero-width bounds pinned at `u`.
    pub fn degenerate(u: UWallVector) -> Result<Self> {
        Self::new(u, u)
    }

    pub fn get(&self, kind: UWallKind) -> (f64, f64) {
        (self.lo[kind.index()], self.hi[kind.index()])
    }

    pub fn lower(&self) -> UWallVector {
        UWallVector::from_array(self.lo)
    }

    pub fn upper(&self) -> UWallVector {
        UWallVector::from_array(self.hi)
    }

    /// Independent uniform draw per component.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> UWallVector {
        UWallVector::from_array(std::array::from_fn(|i| rng.random_range(self.lo[i]..=self.hi[i])))
    }
}

/// Deterministic draw from the default bounds.
pub fn sample_uwall(seed: u64) -> UWallVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    UWallBounds::default().sample(&mut rng)
}
