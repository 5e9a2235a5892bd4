//! Word-sized modular arithmetic for desk-scale moduli.

use num_integer::Integer;

pub fn mul(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

pub fn add(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 + b as u128) % n as u128) as u64
}

pub fn sub(a: u64, b: u64, n: u64) -> u64 {
    add(a % n, n - b % n, n)
}

pub fn inv(a: u64, n: u64) -> Option<u64> {
    let e = (a as i128 % n as i128).extended_gcd(&(n as i128));
    if e.gcd != 1 {
        return None;
    }
    Some(e.x.rem_euclid(n as i128) as u64)
}

/// Rank of `rows` over the prime field `F_p`.
pub fn rank(rows: &[Vec<u64>], p: u64) -> usize {
    let mut m: Vec<Vec<u64>> = rows
        .iter()
        .map(|r| r.iter().map(|x| x % p).collect())
        .collect();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(pivot, rank);
        let scale = inv(m[rank][col], p).expect("nonzero in a prime field");
        for x in m[rank].iter_mut() {
            *x = mul(*x, scale, p);
        }
        let pivot_row = m[rank].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != rank && row[col] != 0 {
                let f = row[col];
                for (x, &y) in row.iter_mut().zip(&pivot_row) {
                    *x = sub(*x, mul(f, y, p), p);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Solves `A·x = b` over `F_p`. Returns a particular solution and a basis of
/// the kernel, or `None` if the system is inconsistent.
pub fn solve(a: &[Vec<u64>], b: &[u64], p: u64) -> Option<(Vec<u64>, Vec<Vec<u64>>)> {
    let cols = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<u64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            row.iter()
                .chain(std::iter::once(&rhs))
                .map(|x| x % p)
                .collect()
        })
        .collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(pivot, rank);
        let scale = inv(m[rank][col], p)?;
        for x in m[rank].iter_mut() {
            *x = mul(*x, scale, p);
        }
        let pivot_row = m[rank].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != rank && row[col] != 0 {
                let f = row[col];
                for (x, &y) in row.iter_mut().zip(&pivot_row) {
                    *x = sub(*x, mul(f, y, p), p);
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    if m[rank..].iter().any(|row| row[cols] != 0) {
        return None;
    }
    let mut particular = vec![0; cols];
    for (r, &c) in pivots.iter().enumerate() {
        particular[c] = m[r][cols];
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let kernel = free
        .iter()
        .map(|&f| {
            let mut v = vec![0; cols];
            v[f] = 1;
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = sub(0, m[r][f], p);
            }
            v
        })
        .collect();
    Some((particular, kernel))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_rank() {
        assert_eq!(inv(5, 62), Some(25));
        assert_eq!(inv(6, 62), None);
        assert_eq!(sub(3, 5, 7), 5);
        assert_eq!(rank(&[vec![1, 2], vec![2, 4]], 7), 1);
        assert_eq!(rank(&[vec![1, 2], vec![2, 5]], 7), 2);
    }

    #[test]
    fn solve_underdetermined() {
        let a = vec![vec![1, 1, 0], vec![0, 1, 1]];
        let (x, kernel) = solve(&a, &[3, 4], 7).unwrap();
        assert_eq!((x[0] + x[1]) % 7, 3);
        assert_eq!((x[1] + x[2]) % 7, 4);
        assert_eq!(kernel.len(), 1);
        let k = &kernel[0];
        assert_eq!((k[0] + k[1]) % 7, 0);
        assert_eq!((k[1] + k[2]) % 7, 0);
        assert!(solve(&[vec![1, 1], vec![2, 2]], &[1, 3], 7).is_none());
    }
}
