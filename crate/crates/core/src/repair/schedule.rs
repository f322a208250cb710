use serde::{Deserialize, Serialize};

/// How far above the error line each repair iteration truncates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// `t = L` on the first iteration, `max(1, L - 4^(i-1))` afterwards.
    #[default]
    JustBefore,
    /// `t = max(1, L - 4^(i-1))` from the first iteration on.
    Offset,
}

impl std::str::FromStr for Schedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "just-before" | "justbefore" => Ok(Self::JustBefore),
            "offset" => Ok(Self::Offset),
            other => Err(format!("unknown schedule `{other}` (expected just-before or offset)")),
        }
    }
}

/// Lines `1..t` are kept and everything from line `t` on is regenerated.
///
/// `error_line` and `repair_iter` are 1-based; zero is treated as one.
pub fn truncation_point(error_line: usize, repair_iter: u32) -> usize {
    truncation_point_with(Schedule::JustBefore, error_line, repair_iter)
}

pub fn truncation_point_with(schedule: Schedule, error_line: usize, repair_iter: u32) -> usize {
    let l = error_line.max(1);
    let i = repair_iter.max(1);
    if schedule == Schedule::JustBefore && i == 1 {
        return l;
    }
    let back = 4usize.checked_pow(i - 1).unwrap_or(usize::MAX);
    l.saturating_sub(back).max(1)
}
