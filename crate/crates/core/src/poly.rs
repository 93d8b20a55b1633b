//! Dense polynomials over `F_p`, coefficients stored low to high.

pub type Poly = Vec<u64>;

pub fn trim(mut a: Poly) -> Poly {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

pub fn degree(a: &[u64]) -> Option<usize> {
    a.iter().rposition(|&c| c != 0)
}

pub fn is_zero(a: &[u64]) -> bool {
    a.iter().all(|&c| c == 0)
}

pub fn from_signed(coeffs: &[i64], p: u64) -> Poly {
    trim(coeffs.iter().map(|&c| c.rem_euclid(p as i64) as u64).collect())
}

pub fn inv_mod(a: u64, p: u64) -> u64 {
    // p is prime, so a^{p-2}
    let mut result = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    result
}

pub fn add(a: &[u64], b: &[u64], p: u64) -> Poly {
    let n = a.len().max(b.len());
    trim((0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0)) % p)
        .collect())
}

pub fn sub(a: &[u64], b: &[u64], p: u64) -> Poly {
    let n = a.len().max(b.len());
    trim((0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0) + p - b.get(i).copied().unwrap_or(0)) % p)
        .collect())
}

pub fn mul(a: &[u64], b: &[u64], p: u64) -> Poly {
    if is_zero(a) || is_zero(b) {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    trim(out)
}

/// Quotient and remainder; `b` must be nonzero.
pub fn divrem(a: &[u64], b: &[u64], p: u64) -> (Poly, Poly) {
    let db = degree(b).expect("division by the zero polynomial");
    let lead_inv = inv_mod(b[db], p);
    let mut r = trim(a.to_vec());
    let mut q = vec![0u64; r.len().saturating_sub(db).max(1)];
    while let Some(dr) = degree(&r) {
        if dr < db {
            break;
        }
        let c = r[dr] * lead_inv % p;
        let shift = dr - db;
        q[shift] = c;
        for (i, &bc) in b[..=db].iter().enumerate() {
            r[shift + i] = (r[shift + i] + p - c * bc % p) % p;
        }
        r = trim(r);
    }
    (trim(q), r)
}

pub fn rem(a: &[u64], b: &[u64], p: u64) -> Poly {
    divrem(a, b, p).1
}

/// Monic normalization; zero stays zero.
pub fn monic(a: &[u64], p: u64) -> Poly {
    match degree(a) {
        None => Vec::new(),
        Some(d) => {
            let inv = inv_mod(a[d], p);
            trim(a[..=d].iter().map(|&c| c * inv % p).collect())
        }
    }
}

/// Strips the power of `t` dividing `a` and makes it monic.
pub fn normalize_unit(a: &[u64], p: u64) -> Poly {
    let a = trim(a.to_vec());
    match a.iter().position(|&c| c != 0) {
        None => Vec::new(),
        Some(low) => monic(&a[low..], p),
    }
}

pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Poly {
    let mut x = trim(a.to_vec());
    let mut y = trim(b.to_vec());
    while !is_zero(&y) {
        let r = rem(&x, &y, p);
        x = y;
        y = r;
    }
    monic(&x, p)
}

pub fn lcm(a: &[u64], b: &[u64], p: u64) -> Poly {
    if is_zero(a) || is_zero(b) {
        return Vec::new();
    }
    let g = gcd(a, b, p);
    monic(&divrem(&mul(a, b, p), &g, p).0, p)
}

/// `t^n − 1`.
pub fn cyclic_modulus(n: usize, p: u64) -> Poly {
    let mut m = vec![0u64; n + 1];
    m[0] = p - 1;
    m[n] = (m[n] + 1) % p;
    trim(m)
}

/// `t^e` with possibly negative `e`, reduced modulo `g` (which must have nonzero constant term).
pub fn monomial_mod(e: i64, g: &[u64], p: u64) -> Poly {
    let deg = degree(g).expect("modulus must be nonzero");
    if deg == 0 {
        return Vec::new();
    }
    let base = if e >= 0 {
        vec![0, 1]
    } else {
        // t^{-1} = -(g - g_0)/t / g_0 mod g
        let g0_inv = inv_mod(g[0], p);
        trim(g[1..=deg].iter().map(|&c| (p - c * g0_inv % p) % p).collect())
    };
    let mut result: Poly = vec![1];
    let mut b = rem(&base, g, p);
    let mut n = e.unsigned_abs();
    while n > 0 {
        if n & 1 == 1 {
            result = rem(&mul(&result, &b, p), g, p);
        }
        b = rem(&mul(&b, &b, p), g, p);
        n >>= 1;
    }
    rem(&result, g, p)
}
