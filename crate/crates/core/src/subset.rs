//! In-place subset-sum (zeta) and Möbius transforms over bitmask-indexed
//! tables of length `2^n`.

/// `table[S] <- sum over T subset of S of table[T]`.
pub fn zeta(table: &mut [f64]) {
    butterfly(table, |low, high| *high += low);
}

/// Inverse of [`zeta`]: `table[S] <- sum over T subset of S of (-1)^{|S \ T|} table[T]`.
pub fn mobius(table: &mut [f64]) {
    butterfly(table, |low, high| *high -= low);
}

fn butterfly(table: &mut [f64], op: impl Fn(f64, &mut f64)) {
    let len = table.len();
    assert!(len.is_power_of_two(), "table length must be a power of two");
    let mut half = 1;
    while half < len {
        for block in table.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (l, h) in lo.iter().zip(hi.iter_mut()) {
                op(*l, h);
            }
        }
        half <<= 1;
    }
}
