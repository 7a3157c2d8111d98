use crate::system::Drive;

/// Which Hamiltonian drives a schedule piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HamKind {
    /// on-site fields `H_f` (first half of each Floquet period)
    Field,
    /// couplings `H_c` (second half)
    Coupling,
    /// `H_f + H_c` for the time-independent drive
    Full,
}

/// A forward-ordered schedule piece between two phases, with its raw duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub kind: HamKind,
    pub raw_duration: f64,
}

/// Decompose the interval `[from, to]` (in periods, `from <= to`) into
/// forward-ordered schedule pieces.
///
/// Convention: one period is `H_f` for the half-period `T`, then `H_c` for
/// `T`. Time `t` in periods spans raw time `2T t`; a fractional time `f`
/// within a period applies `H_f` for `min(2Tf, T)` and the remainder under
/// `H_c`. Backward evolution applies the reversed piece list with
/// spin-negated Hamiltonians (the executor handles that).
pub fn phase_pieces(drive: &Drive, from: f64, to: f64) -> Vec<Piece> {
    assert!(to >= from);
    let period_raw = drive.period_raw();
    if to - from < 1e-12 {
        return Vec::new();
    }
    match drive {
        Drive::TimeIndependent => vec![Piece {
            kind: HamKind::Full,
            raw_duration: (to - from) * period_raw,
        }],
        Drive::Floquet { .. } => {
            let mut pieces = Vec::new();
            let mut p = from;
            let eps = 1e-12 * (1.0 + to.abs());
            while p < to - eps {
                // next half-period boundary strictly above p
                let k = (p / 0.5 + eps).floor();
                let boundary = (k + 1.0) * 0.5;
                let end = boundary.min(to);
                let frac = p - p.floor();
                let kind = if frac < 0.5 - eps {
                    HamKind::Field
                } else {
                    HamKind::Coupling
                };
                pieces.push(Piece {
                    kind,
                    raw_duration: (end - p) * period_raw,
                });
                p = end;
            }
            pieces
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integer_periods_alternate_halves() {
        let d = Drive::floquet();
        let pieces = phase_pieces(&d, 0.0, 2.0);
        assert_eq!(pieces.len(), 4);
        assert_eq!(pieces[0].kind, HamKind::Field);
        assert_eq!(pieces[1].kind, HamKind::Coupling);
        assert_eq!(pieces[2].kind, HamKind::Field);
        assert_eq!(pieces[3].kind, HamKind::Coupling);
        for p in pieces {
            assert!((p.raw_duration - PI / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fractional_time_splits_the_field_half() {
        // t = 0.4 periods: H_f for 0.8 T (raw 0.4π), nothing under H_c yet.
        let d = Drive::floquet();
        let pieces = phase_pieces(&d, 0.0, 0.4);
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].kind, HamKind::Field);
        assert!((pieces[0].raw_duration - 0.4 * PI).abs() < 1e-12);
        // t = 0.7: full field half, then 0.2 periods of coupling
        let pieces = phase_pieces(&d, 0.0, 0.7);
        assert_eq!(pieces.len(), 2);
        assert_eq!(pieces[1].kind, HamKind::Coupling);
        assert!((pieces[0].raw_duration - 0.5 * PI).abs() < 1e-12);
        assert!((pieces[1].raw_duration - 0.2 * PI).abs() < 1e-12);
    }

    #[test]
    fn mid_period_starts_resume_correctly() {
        let d = Drive::floquet();
        let pieces = phase_pieces(&d, 1.5, 2.25);
        assert_eq!(pieces.len(), 2);
        assert_eq!(pieces[0].kind, HamKind::Coupling);
        assert_eq!(pieces[1].kind, HamKind::Field);
        assert!((pieces[0].raw_duration - 0.5 * PI).abs() < 1e-12);
        assert!((pieces[1].raw_duration - 0.25 * PI).abs() < 1e-12);
    }

    #[test]
    fn time_independent_is_one_piece() {
        let pieces = phase_pieces(&Drive::TimeIndependent, 0.0, 1.0);
        assert_eq!(pieces.len(), 1);
        assert_eq!(pieces[0].kind, HamKind::Full);
        assert!((pieces[0].raw_duration - PI).abs() < 1e-12);
    }
}
