//! Bits-per-byte conversion of gold-continuation negative log-likelihoods:
//! a tokenizer-independent task loss.

use core::f64::consts::LN_2;

use crate::Error;

/// nll_nats / (ln 2 * num_bytes).
pub fn bits_per_byte(nll_nats: f64, num_bytes: u64) -> Result<f64, Error> {
    if num_bytes == 0 {
        return Err(Error::InvalidParameter("num_bytes must be at least 1"));
    }
    if !(nll_nats >= 0.0) || !nll_nats.is_finite() {
        return Err(Error::InvalidParameter("nll_nats must be finite and nonnegative"));
    }
    Ok(nll_nats / (LN_2 * num_bytes as f64))
}

/// Corpus-level rate: total nats over total bytes. The default
/// aggregation; long instances weigh in proportion to their bytes.
pub fn micro_bpb(records: &[(f64, u64)]) -> Result<f64, Error> {
    if records.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    let mut nats = 0.0;
    let mut bytes = 0u64;
    for &(nll, b) in records {
        if b == 0 {
            return Err(Error::InvalidParameter("num_bytes must be at least 1"));
        }
        if !(nll >= 0.0) || !nll.is_finite() {
            return Err(Error::InvalidParameter("nll_nats must be finite and nonnegative"));
        }
        nats += nll;
        bytes += b;
    }
    Ok(nats / (LN_2 * bytes as f64))
}

/// Unweighted mean of per-instance rates; every instance counts equally
/// regardless of length.
pub fn macro_bpb(records: &[(f64, u64)]) -> Result<f64, Error> {
    if records.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    let mut acc = 0.0;
    for &(nll, b) in records {
        acc += bits_per_byte(nll, b)?;
    }
    Ok(acc / records.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln2_nats_over_one_byte_is_exactly_one() {
        assert_eq!(bits_per_byte(LN_2, 1).unwrap(), 1.0);
    }

    #[test]
    fn hand_value() {
        // 2 ln 2 nats over 4 bytes: 2/4 = 0.5 bits per byte.
        let v = bits_per_byte(2.0 * LN_2, 4).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn micro_pools_before_dividing() {
        let records = [(LN_2, 1u64), (3.0 * LN_2, 3u64)];
        // (1 + 3) bits over 4 bytes.
        assert!((micro_bpb(&records).unwrap() - 1.0).abs() < 1e-15);
        // Macro averages the per-instance rates 1.0 and 1.0.
        assert!((macro_bpb(&records).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn micro_and_macro_differ_on_uneven_lengths() {
        // Rates 2.0 over 1 byte and 0.5 over 8 bytes.
        let records = [(2.0 * LN_2, 1u64), (4.0 * LN_2, 8u64)];
        let micro = micro_bpb(&records).unwrap();
        let macro_ = macro_bpb(&records).unwrap();
        assert!((micro - 6.0 / 9.0).abs() < 1e-15);
        assert!((macro_ - 1.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_records() {
        assert!(bits_per_byte(1.0, 0).is_err());
        assert!(bits_per_byte(-1.0, 4).is_err());
        assert!(bits_per_byte(f64::NAN, 4).is_err());
        assert!(micro_bpb(&[]).is_err());
        assert!(micro_bpb(&[(1.0, 0)]).is_err());
        assert!(macro_bpb(&[(f64::INFINITY, 2)]).is_err());
    }
}
