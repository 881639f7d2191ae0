use serde::{Deserialize, Serialize};

/// Frequency interval in kHz, `f_low_khz < f_high_khz`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Band {
    pub f_low_khz: u32,
    pub f_high_khz: u32,
}

impl Band {
    pub fn new(f_low_khz: u32, f_high_khz: u32) -> Option<Self> {
        (f_low_khz < f_high_khz).then_some(Self {
            f_low_khz,
            f_high_khz,
        })
    }

    pub fn contains(&self, other: &Band) -> bool {
        self.f_low_khz <= other.f_low_khz && other.f_high_khz <= self.f_high_khz
    }

    /// Half-open overlap test.
    pub fn overlaps(&self, other: &Band) -> bool {
        self.f_low_khz < other.f_high_khz && other.f_low_khz < self.f_high_khz
    }

    pub fn width_khz(&self) -> u32 {
        self.f_high_khz - self.f_low_khz
    }
}

impl std::fmt::Display for Band {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.f_low_khz, self.f_high_khz)
    }
}

impl std::str::FromStr for Band {
    type Err = String;

    /// Parses `LOW:HIGH` in kHz.
    fn from_str(s: &str) -> Result<Self, String> {
        let (lo, hi) = s.split_once(':').ok_or("expected LOW:HIGH")?;
        let lo: u32 = lo.trim().parse().map_err(|e| format!("low edge: {e}"))?;
        let hi: u32 = hi.trim().parse().map_err(|e| format!("high edge: {e}"))?;
        Band::new(lo, hi).ok_or_else(|| "low edge must be below high edge".into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_relations() {
        let a: Band = "3550000:3700000".parse().unwrap();
        let b: Band = "3550000:3560000".parse().unwrap();
        assert!(a.contains(&b) && !b.contains(&a));
        assert!(a.overlaps(&b));
        let c = Band::new(3_560_000, 3_570_000).unwrap();
        assert!(!b.overlaps(&c), "touching edges do not overlap");
        assert!("5:5".parse::<Band>().is_err());
        assert!("x".parse::<Band>().is_err());
    }
}
