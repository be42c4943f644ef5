//! Betti numbers from exact integer ranks of the simplicial coboundary
//! matrices. No metric data enters here, so these counts serve as an
//! independent check on the mass-matrix null spaces.

use crate::error::{Error, Result};
use crate::mesh::SimplicialComplex;

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Rank over the rationals of an integer matrix given as dense rows.
///
/// Fraction-free elimination with row content removal keeps entries small for
/// incidence matrices; overflow is reported instead of wrapping.
pub fn integer_rank(rows: &[Vec<i64>]) -> Result<usize> {
    let mut a: Vec<Vec<i128>> = rows
        .iter()
        .filter(|r| r.iter().any(|&x| x != 0))
        .map(|r| r.iter().map(|&x| x as i128).collect())
        .collect();
    if a.is_empty() {
        return Ok(0);
    }
    let ncols = a[0].len();
    let mut rank = 0;
    for col in 0..ncols {
        // smallest nonzero pivot keeps growth down
        let pivot = (rank..a.len())
            .filter(|&r| a[r][col] != 0)
            .min_by_key(|&r| a[r][col].abs());
        let Some(p) = pivot else { continue };
        a.swap(rank, p);
        let prow = a[rank].clone();
        let pv = prow[col];
        for r in (rank + 1)..a.len() {
            let f = a[r][col];
            if f == 0 {
                continue;
            }
            let g = gcd(pv, f);
            let (mp, mf) = (pv / g, f / g);
            let mut content = 0i128;
            for c in col..ncols {
                let v = a[r][c]
                    .checked_mul(mp)
                    .and_then(|x| prow[c].checked_mul(mf).and_then(|y| x.checked_sub(y)))
                    .ok_or_else(|| Error::Solver("integer overflow in rank computation".into()))?;
                a[r][c] = v;
                content = gcd(content, v);
            }
            if content > 1 {
                for c in col..ncols {
                    a[r][c] /= content;
                }
            }
        }
        rank += 1;
        if rank == a.len() {
            break;
        }
    }
    Ok(rank)
}

/// Signed coboundary `d_k` (rows: `(k+1)`-simplices, cols: `k`-simplices)
/// restricted to the kept simplices, from sorted tuples alone.
fn coboundary_rows(cx: &SimplicialComplex, k: usize, keep: &[Vec<bool>]) -> Vec<Vec<i64>> {
    let cols: Vec<usize> = (0..cx.count(k)).filter(|&i| keep[k][i]).collect();
    let mut col_of = vec![usize::MAX; cx.count(k)];
    for (j, &i) in cols.iter().enumerate() {
        col_of[i] = j;
    }
    cx.simplices(k + 1)
        .iter()
        .enumerate()
        .filter(|(r, _)| keep[k + 1][*r])
        .map(|(_, s)| {
            let mut row = vec![0i64; cols.len()];
            for i in 0..s.len() {
                let mut f = s.clone();
                f.remove(i);
                let fi = cx.index_of(k, &f).expect("face exists");
                if keep[k][fi] {
                    row[col_of[fi]] = if i % 2 == 0 { 1 } else { -1 };
                }
            }
            row
        })
        .collect()
}

fn betti_from(cx: &SimplicialComplex, keep: &[Vec<bool>]) -> Result<Vec<usize>> {
    let n = cx.dim();
    let ranks: Vec<usize> = (0..n)
        .map(|k| integer_rank(&coboundary_rows(cx, k, keep)))
        .collect::<Result<_>>()?;
    Ok((0..=n)
        .map(|k| {
            let nk = keep[k].iter().filter(|&&b| b).count();
            let rk = if k < n { ranks[k] } else { 0 };
            let rkm = if k > 0 { ranks[k - 1] } else { 0 };
            nk - rk - rkm
        })
        .collect())
}

/// Absolute Betti numbers `b_0..b_n` over the rationals.
pub fn betti_numbers(cx: &SimplicialComplex) -> Result<Vec<usize>> {
    let keep: Vec<Vec<bool>> = (0..=cx.dim()).map(|k| vec![true; cx.count(k)]).collect();
    betti_from(cx, &keep)
}

/// Betti numbers of the complex relative to its boundary.
pub fn relative_betti_numbers(cx: &SimplicialComplex) -> Result<Vec<usize>> {
    let keep: Vec<Vec<bool>> = cx
        .boundary_mask()
        .into_iter()
        .map(|m| m.into_iter().map(|b| !b).collect())
        .collect();
    betti_from(cx, &keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_annulus, gen_circle, gen_disk};

    #[test]
    fn rank_of_small_matrices() {
        assert_eq!(integer_rank(&[vec![1, -1, 0], vec![0, 1, -1], vec![1, 0, -1]]).unwrap(), 2);
        assert_eq!(integer_rank(&[vec![2, 4], vec![3, 5]]).unwrap(), 2);
        assert_eq!(integer_rank(&[]).unwrap(), 0);
    }

    #[test]
    fn betti_of_standard_spaces() {
        assert_eq!(betti_numbers(&gen_circle(16).unwrap()).unwrap(), vec![1, 1]);
        assert_eq!(betti_numbers(&gen_disk(16).unwrap()).unwrap(), vec![1, 0, 0]);
        assert_eq!(relative_betti_numbers(&gen_disk(16).unwrap()).unwrap(), vec![0, 0, 1]);
        let a = gen_annulus(16, 1.0, 2.0).unwrap();
        assert_eq!(betti_numbers(&a).unwrap(), vec![1, 1, 0]);
        assert_eq!(relative_betti_numbers(&a).unwrap(), vec![0, 1, 1]);
    }
}
