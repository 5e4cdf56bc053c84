/// Learning-rate schedule: linear warm-up from `base / 10` to `base`, then
/// `base`, `base / 10` and `base / 100`. On a 60-epoch run the last two
/// phases start at epochs 31 and 51; other lengths scale those boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub base: f64,
    pub epochs: usize,
    pub warmup_epochs: usize,
}

impl LrSchedule {
    /// Learning rate of the 1-based `epoch`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let base = self.base;
        if epoch <= self.warmup_epochs {
            if self.warmup_epochs <= 1 {
                return base;
            }
            let t = (epoch.max(1) - 1) as f64 / (self.warmup_epochs - 1) as f64;
            return base / 10.0 + (base - base / 10.0) * t;
        }
        let scaled = |b: usize| ((b * self.epochs) as f64 / 60.0).round() as usize;
        if epoch > scaled(50) {
            base / 100.0
        } else if epoch > scaled(30) {
            base / 10.0
        } else {
            base
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const BASE: f64 = 3.5e-4;

    #[test]
    fn sixty_epoch_schedule() {
        let s = LrSchedule {
            base: BASE,
            epochs: 60,
            warmup_epochs: 10,
        };
        assert_relative_eq!(s.lr_at(1), 3.5e-5, max_relative = 1e-12);
        assert_relative_eq!(s.lr_at(10), 3.5e-4, max_relative = 1e-12);
        assert_relative_eq!(s.lr_at(11), 3.5e-4, max_relative = 1e-12);
        assert_relative_eq!(s.lr_at(30), 3.5e-4, max_relative = 1e-12);
        assert_relative_eq!(s.lr_at(31), 3.5e-5, max_relative = 1e-12);
        assert_relative_eq!(s.lr_at(50), 3.5e-5, max_relative = 1e-12);
        assert_relative_eq!(s.lr_at(51), 3.5e-6, max_relative = 1e-12);
        assert_relative_eq!(s.lr_at(60), 3.5e-6, max_relative = 1e-12);
        for e in 1..10 {
            assert!(s.lr_at(e + 1) > s.lr_at(e));
        }
    }

    #[test]
    fn boundaries_scale_with_length() {
        let s = LrSchedule {
            base: BASE,
            epochs: 12,
            warmup_epochs: 2,
        };
        assert_relative_eq!(s.lr_at(1), 3.5e-5, max_relative = 1e-12);
        assert_relative_eq!(s.lr_at(6), 3.5e-4, max_relative = 1e-12);
        assert_relative_eq!(s.lr_at(7), 3.5e-5, max_relative = 1e-12);
        assert_relative_eq!(s.lr_at(11), 3.5e-6, max_relative = 1e-12);
    }
}
