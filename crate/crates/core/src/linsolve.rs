//! Dense exact linear algebra over the rationals, sized for the small
//! obstruction and weighted-recursion systems (tens of unknowns).

use crate::rat::Rat;
use num::Zero;

/// Solves `M x = rhs` by Gaussian elimination, returning any solution when
/// the system is consistent and `None` otherwise. Free variables are set
/// to zero.
pub fn solve_consistent(mut m: Vec<Vec<Rat>>, mut rhs: Vec<Rat>) -> Option<Vec<Rat>> {
    let rows = m.len();
    if rows == 0 {
        return Some(Vec::new());
    }
    let cols = m[0].len();
    assert!(m.iter().all(|r| r.len() == cols));
    assert_eq!(rhs.len(), rows);

    let mut pivot_of_col = vec![usize::MAX; cols];
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let Some(p) = (row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        rhs.swap(row, p);
        let inv = m[row][col].clone();
        for c in col..cols {
            m[row][c] = &m[row][c] / &inv;
        }
        rhs[row] = &rhs[row] / &inv;
        for r in 0..rows {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..cols {
                    let delta = &factor * &m[row][c];
                    m[r][c] = &m[r][c] - &delta;
                }
                let delta = &factor * &rhs[row];
                rhs[r] = &rhs[r] - &delta;
            }
        }
        pivot_of_col[col] = row;
        row += 1;
    }
    // Inconsistent when a zero row has nonzero rhs.
    for r in row..rows {
        if !rhs[r].is_zero() {
            return None;
        }
    }
    let mut x = vec![Rat::zero(); cols];
    for col in 0..cols {
        if pivot_of_col[col] != usize::MAX {
            x[col] = rhs[pivot_of_col[col]].clone();
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_int;

    #[test]
    fn solves_square_system() {
        // x + y = 3, x - y = 1 -> (2, 1)
        let m = vec![
            vec![rat_int(1), rat_int(1)],
            vec![rat_int(1), rat_int(-1)],
        ];
        let x = solve_consistent(m, vec![rat_int(3), rat_int(1)]).unwrap();
        assert_eq!(x, vec![rat_int(2), rat_int(1)]);
    }

    #[test]
    fn detects_inconsistency_and_underdetermination() {
        let m = vec![vec![rat_int(1), rat_int(1)], vec![rat_int(2), rat_int(2)]];
        assert!(solve_consistent(m.clone(), vec![rat_int(1), rat_int(3)]).is_none());
        let x = solve_consistent(m, vec![rat_int(1), rat_int(2)]).unwrap();
        assert_eq!(&x[0] + &x[1], rat_int(1));
    }
}
