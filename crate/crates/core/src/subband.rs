//! Bandwidth scaling across several SDRs.
//!
//! A wide band is split into sub-bands whose usable intervals tile it. Each
//! sub-band emulates the baseband-equivalent of the wideband channel around
//! its own center, and the per-sub-band responses are laid side by side to
//! recover the wideband response.
//!
//! Adjacent sub-bands are assumed phase coherent: the local oscillators of
//! the parallel SDRs share a common phase reference.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::equalizer::apply_equalizer;
use crate::error::{Error, Result};
use crate::types::{ChannelSnapshot, EqualizerCoeffs, FrequencyResponse, SubBand};

/// Fraction of each sub-band kept when none is configured.
pub const DEFAULT_USABLE_FRACTION: f64 = 0.9;

/// Decomposition of a wide band into contiguous sub-bands.
#[derive(Debug, Clone, PartialEq)]
pub struct SubBandPlan {
    pub total_center: f64,
    pub total_bandwidth: f64,
    pub subbands: Vec<SubBand>,
}

impl SubBandPlan {
    pub fn len(&self) -> usize {
        self.subbands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subbands.is_empty()
    }

    /// Span covered by the union of usable intervals.
    pub fn usable_span(&self) -> (f64, f64) {
        let lo = self.subbands.first().map_or(0.0, |b| b.usable_interval().0);
        let hi = self.subbands.last().map_or(0.0, |b| b.usable_interval().1);
        (lo, hi)
    }
}

/// Tiles `total_bandwidth` around `total_center` with sub-bands of
/// `subband_bandwidth` whose centers are spaced by the usable bandwidth.
pub fn plan_subbands(
    total_center: f64,
    total_bandwidth: f64,
    subband_bandwidth: f64,
    usable_fraction: f64,
) -> Result<SubBandPlan> {
    for (name, value) in [
        ("total_bandwidth", total_bandwidth),
        ("subband_bandwidth", subband_bandwidth),
        ("usable_fraction", usable_fraction),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositiveInput { name, value });
        }
    }
    if usable_fraction > 1.0 {
        return Err(Error::InvalidConfig(format!(
            "usable fraction must not exceed 1, got {usable_fraction}"
        )));
    }
    let spacing = subband_bandwidth * usable_fraction;
    // Relative slack keeps 720/120 at 6 despite rounding.
    let count = (total_bandwidth / spacing * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let first = total_center - (count - 1) as f64 * spacing / 2.0;
    let subbands = (0..count)
        .map(|i| SubBand::new(first + i as f64 * spacing, subband_bandwidth, usable_fraction))
        .collect::<Result<Vec<_>>>()?;
    Ok(SubBandPlan {
        total_center,
        total_bandwidth,
        subbands,
    })
}

/// Baseband-equivalent channel of `subband` given a wideband channel whose
/// baseband is referenced to `reference_center`. Delays are kept; every
/// amplitude is rotated by `e^{-j2π (f_sub − f_ref) d}`.
pub fn project_channel(
    snapshot: &ChannelSnapshot,
    subband: &SubBand,
    reference_center: f64,
) -> ChannelSnapshot {
    let offset = subband.center_frequency - reference_center;
    ChannelSnapshot {
        timestamp: snapshot.timestamp,
        taps: snapshot
            .taps
            .iter()
            .map(|t| crate::types::Tap {
                delay: t.delay,
                amplitude: t.amplitude * Complex64::from_polar(1.0, -2.0 * PI * offset * t.delay),
            })
            .collect(),
    }
}

/// One acquired sub-band response. The response grid is baseband, relative
/// to `subband.center_frequency`.
#[derive(Debug, Clone, PartialEq)]
pub struct StitchPiece {
    pub subband: SubBand,
    pub response: FrequencyResponse,
}

/// Relative tolerance for values of overlapping pieces.
const OVERLAP_TOLERANCE: f64 = 1e-9;

/// Lays the pieces side by side on the finest common grid.
///
/// Every output bin takes its value from the piece whose usable interval
/// `[low, high)` contains it. Bins outside all usable intervals, or not on the
/// owning piece's grid, are flagged absent in `present`.
pub fn stitch(pieces: &[StitchPiece]) -> Result<FrequencyResponse> {
    if pieces.is_empty() {
        return Err(Error::GridMismatch("nothing to stitch".into()));
    }
    for piece in pieces {
        piece.subband.validate()?;
        piece.response.grid().validate()?;
    }
    if pieces
        .windows(2)
        .any(|w| w[1].subband.center_frequency < w[0].subband.center_frequency)
    {
        return Err(Error::GridMismatch(
            "pieces must be ordered by center frequency".into(),
        ));
    }

    let step = pieces
        .iter()
        .map(|p| p.response.frequency_step)
        .fold(f64::INFINITY, f64::min);
    let finest = pieces
        .iter()
        .find(|p| p.response.frequency_step == step)
        .expect("non-empty");
    let anchor = finest.subband.center_frequency + finest.response.start_frequency;

    for piece in pieces {
        let ratio = piece.response.frequency_step / step;
        let origin = (piece.subband.center_frequency + piece.response.start_frequency - anchor) / step;
        if (ratio - ratio.round()).abs() > 1e-6 || (origin - origin.round()).abs() > 1e-6 {
            return Err(Error::GridMismatch(format!(
                "piece at {} Hz is not on a grid commensurate with step {} Hz",
                piece.subband.center_frequency, step
            )));
        }
    }

    let low = pieces
        .iter()
        .map(|p| p.subband.usable_interval().0)
        .fold(f64::INFINITY, f64::min);
    let high = pieces
        .iter()
        .map(|p| p.subband.usable_interval().1)
        .fold(f64::NEG_INFINITY, f64::max);
    let eps = 1e-6 * step;
    let first_k = ((low - anchor - eps) / step).ceil() as i64;
    let last_k = ((high - anchor - eps) / step).ceil() as i64 - 1;
    if last_k < first_k {
        return Err(Error::GridMismatch(
            "usable intervals contain no grid points".into(),
        ));
    }
    let points = (last_k - first_k + 1) as usize;
    let start = anchor + first_k as f64 * step;

    let mut values = vec![Complex64::new(0.0, 0.0); points];
    let mut present = vec![false; points];
    for (i, f) in (0..points).map(|i| (i, start + i as f64 * step)) {
        let mut owner: Option<Complex64> = None;
        for piece in pieces {
            let (lo, hi) = piece.subband.usable_interval();
            if !(f >= lo - eps && f < hi - eps) {
                continue;
            }
            let Some(v) = sample_piece(piece, f, eps) else {
                continue;
            };
            match owner {
                None => owner = Some(v),
                Some(prev) => {
                    let scale = prev.norm().max(v.norm()).max(f64::MIN_POSITIVE);
                    if (prev - v).norm() > OVERLAP_TOLERANCE * scale {
                        return Err(Error::OverlapConflict { frequency: f });
                    }
                }
            }
        }
        if let Some(v) = owner {
            values[i] = v;
            present[i] = true;
        }
    }
    let mut out = FrequencyResponse::new(start, step, values)?;
    if present.iter().any(|&p| !p) {
        out.present = Some(present);
    }
    Ok(out)
}

fn sample_piece(piece: &StitchPiece, f: f64, eps: f64) -> Option<Complex64> {
    let r = &piece.response;
    let pos = (f - piece.subband.center_frequency - r.start_frequency) / r.frequency_step;
    let k = pos.round();
    if (pos - k).abs() * r.frequency_step > eps || k < 0.0 || k as usize >= r.len() {
        return None;
    }
    let k = k as usize;
    r.is_present(k).then(|| r.values[k])
}

/// Applies one equalizer per piece, then stitches.
pub fn stitch_equalized(pieces: &[StitchPiece], coeffs: &[EqualizerCoeffs]) -> Result<FrequencyResponse> {
    if pieces.len() != coeffs.len() {
        return Err(Error::InvalidConfig(format!(
            "{} pieces but {} equalizers",
            pieces.len(),
            coeffs.len()
        )));
    }
    let equalized: Vec<StitchPiece> = pieces
        .iter()
        .zip(coeffs)
        .map(|(p, c)| StitchPiece {
            subband: p.subband,
            response: apply_equalizer(&p.response, c),
        })
        .collect();
    stitch(&equalized)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tdl::channel_frequency_response;
    use crate::types::{FrequencyGrid, Tap};

    #[test]
    fn single_band_plan() {
        let plan = plan_subbands(60e9, 120e6, 120e6, 1.0).unwrap();
        assert_eq!(plan.len(), 1);
        assert_eq!(plan.subbands[0].center_frequency, 60e9);
    }

    #[test]
    fn six_and_seven_band_plans() {
        let plan = plan_subbands(0.0, 720e6, 120e6, 1.0).unwrap();
        assert_eq!(plan.len(), 6);
        for w in plan.subbands.windows(2) {
            assert!((w[1].center_frequency - w[0].center_frequency - 120e6).abs() < 1e-3);
        }
        assert_eq!(plan_subbands(0.0, 720e6, 120e6, 0.9).unwrap().len(), 7);
    }

    #[test]
    fn plan_rejects_bad_inputs() {
        assert!(plan_subbands(0.0, 720e6, 0.0, 1.0).is_err());
        assert!(plan_subbands(0.0, 720e6, 120e6, 0.0).is_err());
        assert!(plan_subbands(0.0, 720e6, 120e6, 1.5).is_err());
        assert!(plan_subbands(0.0, -1.0, 120e6, 1.0).is_err());
    }

    fn one_tap(delay: f64) -> ChannelSnapshot {
        ChannelSnapshot::new(0.0, vec![Tap::new(delay, Complex64::new(1.0, 0.0))])
    }

    #[test]
    fn projection_phase_arithmetic() {
        let band = SubBand::new(120e6, 120e6, 1.0).unwrap();
        let same = SubBand::new(0.0, 120e6, 1.0).unwrap();
        let s = one_tap(500e-9);
        assert_eq!(project_channel(&s, &same, 0.0), s);
        let a = project_channel(&s, &band, 0.0).taps[0].amplitude;
        assert!((a - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        let b = project_channel(&one_tap(60.5 / 120e6), &band, 0.0).taps[0].amplitude;
        assert!((b + Complex64::new(1.0, 0.0)).norm() < 1e-9);
    }

    fn flat_piece(center: f64, gain: f64) -> StitchPiece {
        StitchPiece {
            subband: SubBand::new(center, 120e6, 1.0).unwrap(),
            response: FrequencyResponse::new(-60e6, 1e6, vec![Complex64::new(gain, 0.0); 120]).unwrap(),
        }
    }

    #[test]
    fn single_piece_restricted_to_usable_interval() {
        let mut p = flat_piece(1e9, 1.0);
        p.subband.usable_fraction = 0.5;
        let out = stitch(&[p]).unwrap();
        assert_eq!(out.len(), 60);
        assert_eq!(out.start_frequency, 1e9 - 30e6);
        assert!(!out.has_gaps());
    }

    #[test]
    fn adjacent_flat_pieces_stay_flat() {
        let out = stitch(&[flat_piece(1e9, 2.0), flat_piece(1.12e9, 2.0)]).unwrap();
        assert_eq!(out.len(), 240);
        assert!(out.values.iter().all(|v| *v == Complex64::new(2.0, 0.0)));
        assert!(out.present.is_none());
    }

    #[test]
    fn guard_gaps_are_marked_absent() {
        let plan = plan_subbands(0.0, 360e6, 120e6, 0.9).unwrap();
        // spread the sub-bands to open 12 MHz gaps between usable intervals
        let pieces: Vec<_> = plan
            .subbands
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let mut p = flat_piece(i as f64 * 120e6, 1.0);
                p.subband.usable_fraction = b.usable_fraction;
                p
            })
            .collect();
        let out = stitch(&pieces).unwrap();
        let present = out.present.as_ref().unwrap();
        let gaps = present.iter().filter(|&&p| !p).count();
        assert_eq!(gaps, 12 * (pieces.len() - 1));
    }

    #[test]
    fn conflicting_overlap_is_an_error() {
        let a = flat_piece(0.0, 1.0);
        let b = flat_piece(60e6, 2.0);
        assert!(matches!(
            stitch(&[a.clone(), b]),
            Err(Error::OverlapConflict { .. })
        ));
        let c = flat_piece(60e6, 1.0);
        assert!(stitch(&[a, c]).is_ok());
    }

    #[test]
    fn incommensurate_grids_are_rejected() {
        let a = flat_piece(0.0, 1.0);
        let mut b = flat_piece(120e6, 1.0);
        b.response = FrequencyResponse::new(-60e6, 0.7e6, vec![Complex64::new(1.0, 0.0); 200]).unwrap();
        assert!(matches!(stitch(&[a, b]), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn stitched_two_tap_matches_wideband() {
        let center = 60e9;
        let plan = plan_subbands(center, 720e6, 120e6, 1.0).unwrap();
        let snap = ChannelSnapshot::two_tap(500e-9);
        let grid = FrequencyGrid::new(-60e6, 0.5e6, 240).unwrap();
        let pieces: Vec<_> = plan
            .subbands
            .iter()
            .map(|b| StitchPiece {
                subband: *b,
                response: channel_frequency_response(&project_channel(&snap, b, center), &grid).unwrap(),
            })
            .collect();
        let out = stitch(&pieces).unwrap();
        assert_eq!(out.len(), 1440);
        let wide = channel_frequency_response(
            &snap,
            &FrequencyGrid::new(out.start_frequency - center, 0.5e6, 1440).unwrap(),
        )
        .unwrap();
        for (a, b) in out.values.iter().zip(&wide.values) {
            assert!((a - b).norm() < 1e-9 * 2.0);
        }
    }
}
