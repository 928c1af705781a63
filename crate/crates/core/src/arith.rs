//! Integer helpers for order bookkeeping.

pub fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn lcm_checked(a: u128, b: u128) -> Option<u128> {
    if a == 0 || b == 0 {
        return Some(0);
    }
    (a / gcd(a, b)).checked_mul(b)
}

pub fn lcm_saturating(a: u128, b: u128) -> u128 {
    lcm_checked(a, b).unwrap_or(u128::MAX)
}

pub fn lcm_all(values: impl IntoIterator<Item = u128>) -> u128 {
    values.into_iter().fold(1, lcm_saturating)
}
