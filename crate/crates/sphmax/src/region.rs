//! Exact classification of exponent tuples against the boundedness region
//! of the m-linear spherical maximal operator.
//!
//! Work in reciprocal coordinates `t = (1/p_1, ..., 1/p_m)` inside the cube
//! `[0,1]^m`. The closed boundedness region is
//!
//! ```text
//! H = [0,1]^m  intersect  { sum_j t_j <= (mn-1)/n },
//! ```
//!
//! a polytope with `2^m + m - 1` vertices: every 0/1 corner of the cube
//! except the all-ones corner, plus the points
//! `v_j = (1, ..., 1, (n-1)/n, 1, ..., 1)`. The critical hyperplane
//! `sum_j t_j = (mn-1)/n` cuts the cube in the simplex
//! `V = conv{v_1, ..., v_m}`, where only weak-type and Lorentz endpoint
//! estimates survive. All arithmetic here is exact rational: boundary cases
//! are measure zero and float comparisons would misclassify them.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};

/// Exact rational scalar used for exponent arithmetic.
pub type Q = Ratio<i64>;

/// A point `(1/p_1, ..., 1/p_m)` in `[0,1]^m` for the operator on `R^n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentTuple {
    n: usize,
    recips: Vec<Q>,
}

impl ExponentTuple {
    pub fn new(n: usize, recips: Vec<Q>) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("need n >= 2, got {n}")));
        }
        if recips.len() < 2 {
            return Err(Error::Domain("need at least two exponents".into()));
        }
        let zero = Q::from_integer(0);
        let one = Q::from_integer(1);
        for r in &recips {
            if *r < zero || *r > one {
                return Err(Error::Domain(format!(
                    "reciprocal exponent {r} outside [0, 1]"
                )));
            }
        }
        Ok(ExponentTuple { n, recips })
    }

    pub fn factors(&self) -> usize {
        self.recips.len()
    }
    pub fn ambient_dim(&self) -> usize {
        self.n
    }
    pub fn recips(&self) -> &[Q] {
        &self.recips
    }

    /// `1/p = sum_j 1/p_j`.
    pub fn recip_p(&self) -> Q {
        self.recips.iter().sum()
    }

    /// The critical value `(mn - 1)/n` for this tuple's `(m, n)`.
    pub fn critical_sum(&self) -> Q {
        critical_sum(self.factors(), self.n)
    }
}

/// `(mn - 1)/n` as an exact rational.
pub fn critical_sum(m: usize, n: usize) -> Q {
    Q::new((m * n) as i64 - 1, n as i64)
}

/// Position of a tuple relative to the simplex `V` inside the critical
/// hyperplane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HullPosition {
    Interior,
    Boundary,
    Outside,
}

/// Membership in `V = conv{v_1, ..., v_m}`, decided exactly.
///
/// `v_j = (1,...,1) - e_j / n`, so `t` lies in `V` iff `t` is on the critical
/// hyperplane and the barycentric weights `lambda_j = n (1 - t_j)` are all
/// nonnegative -- which inside the cube they always are. On the hyperplane
/// the weights automatically sum to one, so membership reduces to sign
/// checks: zero weights put the point on the simplex boundary.
pub fn in_hull_v(t: &ExponentTuple) -> HullPosition {
    if t.recip_p() != t.critical_sum() {
        return HullPosition::Outside;
    }
    let one = Q::from_integer(1);
    let mut boundary = false;
    for r in t.recips() {
        let lambda = Q::from_integer(t.ambient_dim() as i64) * (one - r);
        if lambda < Q::from_integer(0) {
            return HullPosition::Outside; // unreachable for cube points
        }
        if lambda == Q::from_integer(0) {
            boundary = true;
        }
    }
    if boundary {
        HullPosition::Boundary
    } else {
        HullPosition::Interior
    }
}

/// The classification cases. Letters match the endpoint case analysis:
/// (a) origin vertex, (b) other 0/1 vertices, (c) faces with zero fixed
/// coordinates, (d) faces with a fixed coordinate equal to one, (e)/(f)
/// boundary/interior of the critical simplex V.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// Strong type holds; interior of the region (all exponents finite,
    /// strictly below the critical hyperplane).
    InteriorStrong,
    /// The all-zero vertex: strong type endpoint (a).
    VertexOrigin,
    /// Any other 0/1 vertex inside the region: weak type endpoint (b).
    VertexWeak,
    /// Open cube face below the critical plane, all fixed coordinates 0:
    /// strong type (c).
    FaceStrongZeros,
    /// Open cube face below the critical plane with a fixed coordinate 1:
    /// strong type for n >= 3 (d); open at n = 2.
    FaceStrongOnes,
    /// Critical hyperplane, boundary of V: restricted weak type endpoint (e)
    /// for n >= 3.
    CriticalBoundaryV,
    /// Critical hyperplane, interior of V: weak type endpoint (f) for
    /// n >= 3.
    CriticalInteriorV,
    /// Critical hyperplane outside the closure of V. No positive result is
    /// asserted there. (For tuples inside the cube this cannot occur: the
    /// critical slice of the cube equals V.)
    CriticalOutsideV,
    /// Beyond the critical hyperplane: unbounded.
    Unbounded,
}

/// A verdict plus a human-readable note naming the governing case.
#[derive(Debug, Clone, Serialize)]
pub struct RegionClassification {
    pub verdict: Verdict,
    pub notes: String,
}

/// Classify an exponent tuple. Total on valid tuples; pure rational
/// comparisons throughout.
pub fn classify(t: &ExponentTuple) -> RegionClassification {
    let m = t.factors();
    let n = t.ambient_dim();
    let s = t.recip_p();
    let crit = t.critical_sum();
    let zero = Q::from_integer(0);
    let one = Q::from_integer(1);

    if s > crit {
        return RegionClassification {
            verdict: Verdict::Unbounded,
            notes: format!(
                "sum of reciprocals {s} exceeds the critical value {crit} = ({m}*{n}-1)/{n}; \
                 the power-log counterexamples rule out any bound"
            ),
        };
    }

    if s == crit {
        let n2_note = if n == 2 {
            " For n = 2 no positive endpoint estimate is known on the critical plane \
             (the linear restricted weak type endpoint fails there); the verdict records \
             the geometric position only."
        } else {
            ""
        };
        return match in_hull_v(t) {
            HullPosition::Boundary => RegionClassification {
                verdict: Verdict::CriticalBoundaryV,
                notes: format!(
                    "critical hyperplane, boundary of the simplex V: Lorentz-space \
                     restricted weak type endpoint (case e, n >= 3).{n2_note}"
                ),
            },
            HullPosition::Interior => RegionClassification {
                verdict: Verdict::CriticalInteriorV,
                notes: format!(
                    "critical hyperplane, interior of the simplex V: weak type endpoint \
                     (case f, n >= 3).{n2_note}"
                ),
            },
            HullPosition::Outside => {
                // Inside the cube the critical slice equals V, so this branch
                // only documents the convention for completeness.
                if n >= 3 {
                    RegionClassification {
                        verdict: Verdict::CriticalOutsideV,
                        notes: "critical hyperplane outside closure(V): no claim either way".into(),
                    }
                } else {
                    RegionClassification {
                        verdict: Verdict::Unbounded,
                        notes: "critical hyperplane at n = 2 outside closure(V): \
                                no positive result; counterexamples apply"
                            .into(),
                    }
                }
            }
        };
    }

    // Strictly below the critical hyperplane.
    let fixed: Vec<usize> = t
        .recips()
        .iter()
        .enumerate()
        .filter(|(_, r)| **r == zero || **r == one)
        .map(|(j, _)| j)
        .collect();
    if fixed.len() == m {
        if t.recips().iter().all(|r| *r == zero) {
            return RegionClassification {
                verdict: Verdict::VertexOrigin,
                notes: "all exponents infinite: strong type endpoint (case a)".into(),
            };
        }
        return RegionClassification {
            verdict: Verdict::VertexWeak,
            notes: "0/1 vertex inside the region: weak type endpoint (case b)".into(),
        };
    }
    if fixed.is_empty() {
        return RegionClassification {
            verdict: Verdict::InteriorStrong,
            notes: format!(
                "all reciprocals in (0,1) and {s} < {crit}: strong type (case I, \
                 bounded iff p > n/(mn-1))"
            ),
        };
    }
    let has_one = fixed.iter().any(|&j| t.recips()[j] == one);
    if has_one {
        let note_tail = if n == 2 {
            " Asserted for n >= 3 only; open at n = 2."
        } else {
            ""
        };
        RegionClassification {
            verdict: Verdict::FaceStrongOnes,
            notes: format!(
                "open face below the critical plane with a fixed coordinate 1: \
                 strong type when n >= 3 (case d).{note_tail}"
            ),
        }
    } else {
        RegionClassification {
            verdict: Verdict::FaceStrongZeros,
            notes: "open face below the critical plane, all fixed coordinates 0: \
                    strong type (case c)"
                .into(),
        }
    }
}

/// The `2^m + m - 1` vertices of the region `H`: all 0/1 corners of the cube
/// except `(1,...,1)`, plus `v_j = (1,...,1,(n-1)/n,1,...,1)`.
pub fn polytope_vertices(m: usize, n: usize) -> Result<Vec<ExponentTuple>> {
    if m < 2 || n < 2 {
        return Err(Error::Domain(format!("need m, n >= 2, got m={m}, n={n}")));
    }
    let mut out = Vec::with_capacity((1usize << m) + m - 1);
    for mask in 0..(1usize << m) {
        if mask == (1usize << m) - 1 {
            continue; // the all-ones corner lies beyond the critical plane
        }
        let recips: Vec<Q> = (0..m)
            .map(|j| Q::from_integer(((mask >> j) & 1) as i64))
            .collect();
        out.push(ExponentTuple::new(n, recips)?);
    }
    let frac = Q::new(n as i64 - 1, n as i64);
    for j in 0..m {
        let recips: Vec<Q> = (0..m)
            .map(|i| if i == j { frac } else { Q::from_integer(1) })
            .collect();
        out.push(ExponentTuple::new(n, recips)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(num: i64, den: i64) -> Q {
        Q::new(num, den)
    }

    fn tuple(n: usize, recips: &[(i64, i64)]) -> ExponentTuple {
        ExponentTuple::new(n, recips.iter().map(|&(a, b)| q(a, b)).collect()).unwrap()
    }

    #[test]
    fn classify_reference_points() {
        // Interior point of the bilinear region.
        let t = tuple(2, &[(1, 2), (1, 2)]);
        assert_eq!(classify(&t).verdict, Verdict::InteriorStrong);

        // Beyond the critical plane.
        let t = tuple(2, &[(1, 1), (1, 1)]);
        assert_eq!(classify(&t).verdict, Verdict::Unbounded);

        // Origin vertex.
        let t = tuple(2, &[(0, 1), (0, 1)]);
        assert_eq!(classify(&t).verdict, Verdict::VertexOrigin);
        let t = tuple(5, &[(0, 1), (0, 1)]);
        assert_eq!(classify(&t).verdict, Verdict::VertexOrigin);

        // v_1 for m = 3, n = 2 sits on the boundary of V.
        let t = tuple(2, &[(1, 2), (1, 1), (1, 1)]);
        assert_eq!(t.recip_p(), q(5, 2));
        assert_eq!(t.critical_sum(), q(5, 2));
        assert_eq!(classify(&t).verdict, Verdict::CriticalBoundaryV);
    }

    #[test]
    fn classify_endpoint_cases() {
        // Other 0/1 vertices are weak type.
        assert_eq!(
            classify(&tuple(2, &[(1, 1), (0, 1)])).verdict,
            Verdict::VertexWeak
        );
        // Face with fixed zeros.
        assert_eq!(
            classify(&tuple(2, &[(0, 1), (1, 2)])).verdict,
            Verdict::FaceStrongZeros
        );
        // Face with a fixed one, below the critical plane.
        assert_eq!(
            classify(&tuple(3, &[(1, 1), (1, 2)])).verdict,
            Verdict::FaceStrongOnes
        );
        let c = classify(&tuple(2, &[(1, 1), (1, 4)]));
        assert_eq!(c.verdict, Verdict::FaceStrongOnes);
        assert!(c.notes.contains("open at n = 2"));
        // Critical interior of V (n = 3, m = 2): barycenter of v_1, v_2.
        let c = classify(&tuple(3, &[(5, 6), (5, 6)]));
        assert_eq!(c.verdict, Verdict::CriticalInteriorV);
    }

    #[test]
    fn unbounded_iff_above_critical() {
        // Sweep a rational grid and compare against the sign test.
        for n in [2usize, 3] {
            for a in 0..=4 {
                for b in 0..=4 {
                    for c in 0..=4 {
                        let t = tuple(n, &[(a, 4), (b, 4), (c, 4)]);
                        let above = t.recip_p() > t.critical_sum();
                        let got = classify(&t).verdict == Verdict::Unbounded;
                        assert_eq!(above, got, "n={n} t={:?}", t.recips());
                    }
                }
            }
        }
    }

    #[test]
    fn hull_membership() {
        // v_1 is a hull vertex, so on the boundary.
        let v1 = tuple(2, &[(1, 2), (1, 1), (1, 1)]);
        assert_eq!(in_hull_v(&v1), HullPosition::Boundary);
        // Barycenter of the v_j: interior.
        let bary = tuple(2, &[(5, 6), (5, 6), (5, 6)]);
        assert_eq!(bary.recip_p(), q(5, 2));
        assert_eq!(in_hull_v(&bary), HullPosition::Interior);
        // Off the hyperplane: outside.
        let t = tuple(2, &[(1, 2), (1, 2), (1, 2)]);
        assert_eq!(in_hull_v(&t), HullPosition::Outside);
    }

    #[test]
    fn vertices_bilinear_n2() {
        let vs = polytope_vertices(2, 2).unwrap();
        assert_eq!(vs.len(), 5);
        let expect: Vec<Vec<Q>> = vec![
            vec![q(0, 1), q(0, 1)],
            vec![q(1, 1), q(0, 1)],
            vec![q(0, 1), q(1, 1)],
            vec![q(1, 2), q(1, 1)],
            vec![q(1, 1), q(1, 2)],
        ];
        for e in &expect {
            assert!(
                vs.iter().any(|v| v.recips() == e.as_slice()),
                "missing {e:?}"
            );
        }
    }

    #[test]
    fn vertices_trilinear_n2() {
        let vs = polytope_vertices(3, 2).unwrap();
        assert_eq!(vs.len(), 10); // 2^3 + 3 - 1
        let v1: Vec<Q> = vec![q(1, 2), q(1, 1), q(1, 1)];
        assert!(vs.iter().any(|v| v.recips() == v1.as_slice()));
    }

    #[test]
    fn fractional_vertices_sit_on_critical_plane() {
        for (m, n) in [(2usize, 2usize), (3, 2), (4, 3), (2, 5)] {
            let crit = critical_sum(m, n);
            let vs = polytope_vertices(m, n).unwrap();
            let mut critical = 0;
            for v in &vs {
                assert!(v.recip_p() <= crit);
                if v.recip_p() == crit {
                    critical += 1;
                }
            }
            assert_eq!(critical, m, "exactly the v_j are critical");
        }
    }

    #[test]
    fn permutation_equivariance() {
        let t = tuple(3, &[(1, 3), (1, 1), (0, 1)]);
        let base = classify(&t).verdict;
        // All permutations of the coordinates give the same verdict.
        let perms: [[usize; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        for p in perms {
            let recips: Vec<Q> = p.iter().map(|&i| t.recips()[i]).collect();
            let tp = ExponentTuple::new(3, recips).unwrap();
            assert_eq!(classify(&tp).verdict, base);
        }
    }

    #[test]
    fn invalid_tuples_rejected() {
        assert!(ExponentTuple::new(1, vec![q(1, 2), q(1, 2)]).is_err());
        assert!(ExponentTuple::new(2, vec![q(1, 2)]).is_err());
        assert!(ExponentTuple::new(2, vec![q(3, 2), q(0, 1)]).is_err());
        assert!(ExponentTuple::new(2, vec![q(-1, 2), q(0, 1)]).is_err());
    }
}
