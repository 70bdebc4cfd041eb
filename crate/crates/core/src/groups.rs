//! Finite groups stored as Cayley tables.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polyfunc::{PolyMatrix, RatFunc};

/// Largest group order accepted anywhere in the crate.
pub const MAX_GROUP_ORDER: usize = 64;

/// Cap on the number of violations [`validate_group`] reports.
const MAX_REPORTED: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("closure exceeded {bound} elements")]
    BoundExceeded { bound: usize },
    #[error("group order {0} exceeds the supported maximum of 64")]
    OrderTooLarge(usize),
    #[error("invalid Cayley table: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidTable(Vec<Violation>),
    #[error("expected {expected} names, got {got}")]
    NameCount { expected: usize, got: usize },
    #[error("coefficient vector has length {got}, group has order {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("the empty generator list generates nothing")]
    NoGenerators,
    #[error("malformed group JSON: {0}")]
    Json(String),
}

/// One defect found by [`validate_group`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Empty,
    NotSquare { row: usize, len: usize },
    EntryOutOfRange { row: usize, col: usize, value: usize },
    IdentityRow { col: usize },
    IdentityColumn { row: usize },
    RowNotLatin { row: usize },
    ColumnNotLatin { col: usize },
    NoInverse { element: usize },
    NotAssociative { a: usize, b: usize, c: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "empty table"),
            Violation::NotSquare { row, len } => write!(f, "row {row} has length {len}"),
            Violation::EntryOutOfRange { row, col, value } => {
                write!(f, "entry ({row},{col}) = {value} is out of range")
            }
            Violation::IdentityRow { col } => write!(f, "row 0 is not the identity at column {col}"),
            Violation::IdentityColumn { row } => write!(f, "column 0 is not the identity at row {row}"),
            Violation::RowNotLatin { row } => write!(f, "row {row} repeats an element"),
            Violation::ColumnNotLatin { col } => write!(f, "column {col} repeats an element"),
            Violation::NoInverse { element } => write!(f, "element {element} has no inverse"),
            Violation::NotAssociative { a, b, c } => write!(f, "({a}*{b})*{c} != {a}*({b}*{c})"),
        }
    }
}

/// Check a raw table for the group axioms with index 0 as identity.
/// An empty result means the table is a group.
pub fn validate_group(table: &[Vec<usize>]) -> Vec<Violation> {
    let n = table.len();
    let mut out = Vec::new();
    if n == 0 {
        return vec![Violation::Empty];
    }
    for (i, row) in table.iter().enumerate() {
        if row.len() != n {
            out.push(Violation::NotSquare { row: i, len: row.len() });
        }
    }
    if !out.is_empty() {
        return out;
    }
    for (i, row) in table.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v >= n {
                out.push(Violation::EntryOutOfRange { row: i, col: j, value: v });
            }
        }
    }
    if !out.is_empty() {
        out.truncate(MAX_REPORTED);
        return out;
    }
    for j in 0..n {
        if table[0][j] != j {
            out.push(Violation::IdentityRow { col: j });
        }
        if table[j][0] != j {
            out.push(Violation::IdentityColumn { row: j });
        }
    }
    let mut seen = vec![false; n];
    for (i, row) in table.iter().enumerate() {
        seen.iter_mut().for_each(|s| *s = false);
        for &v in row {
            seen[v] = true;
        }
        if seen.iter().any(|s| !s) {
            out.push(Violation::RowNotLatin { row: i });
        }
    }
    for j in 0..n {
        seen.iter_mut().for_each(|s| *s = false);
        for row in table {
            seen[row[j]] = true;
        }
        if seen.iter().any(|s| !s) {
            out.push(Violation::ColumnNotLatin { col: j });
        }
    }
    for (i, row) in table.iter().enumerate() {
        if !row.iter().enumerate().any(|(j, &v)| v == 0 && table[j][i] == 0) {
            out.push(Violation::NoInverse { element: i });
        }
    }
    'assoc: for a in 0..n {
        for b in 0..n {
            let ab = table[a][b];
            for c in 0..n {
                if table[ab][c] != table[a][table[b][c]] {
                    out.push(Violation::NotAssociative { a, b, c });
                    if out.len() >= MAX_REPORTED {
                        break 'assoc;
                    }
                }
            }
        }
    }
    out.truncate(MAX_REPORTED);
    out
}

/// A finite group with named elements; element 0 is the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    names: Vec<String>,
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
}

/// JSON shape of an exported Cayley table.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
pub struct CayleyTable {
    pub order: usize,
    pub names: Vec<String>,
    pub table: Vec<Vec<usize>>,
}

impl Group {
    pub fn from_table(names: Vec<String>, table: Vec<Vec<usize>>) -> Result<Group, GroupError> {
        if table.len() > MAX_GROUP_ORDER {
            return Err(GroupError::OrderTooLarge(table.len()));
        }
        if names.len() != table.len() {
            return Err(GroupError::NameCount { expected: table.len(), got: names.len() });
        }
        let violations = validate_group(&table);
        if !violations.is_empty() {
            return Err(GroupError::InvalidTable(violations));
        }
        let inverse = (0..table.len())
            .map(|i| table[i].iter().position(|&v| v == 0).unwrap())
            .collect();
        Ok(Group { names, table, inverse })
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.order();
        (0..n).all(|i| (0..n).all(|j| self.table[i][j] == self.table[j][i]))
    }

    /// Order of element `a`.
    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    /// Least common multiple of all element orders.
    pub fn exponent(&self) -> usize {
        use num_integer::Integer;
        (0..self.order()).fold(1, |acc, a| acc.lcm(&self.element_order(a)))
    }

    /// The same group with elements listed in a new order: new element `i`
    /// is old element `perm[i]`. `perm[0]` must be 0.
    pub fn relabel(&self, perm: &[usize]) -> Result<Group, GroupError> {
        let n = self.order();
        let mut pos = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old < n {
                pos[old] = new;
            }
        }
        if perm.len() != n || pos.contains(&usize::MAX) {
            return Err(GroupError::LengthMismatch { expected: n, got: perm.len() });
        }
        let table = (0..n)
            .map(|i| (0..n).map(|j| pos[self.table[perm[i]][perm[j]]]).collect())
            .collect();
        let names = perm.iter().map(|&o| self.names[o].clone()).collect();
        Group::from_table(names, table)
    }

    pub fn to_cayley(&self) -> CayleyTable {
        CayleyTable { order: self.order(), names: self.names.clone(), table: self.table.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_cayley()).expect("plain data serialises")
    }

    pub fn from_json(text: &str) -> Result<Group, GroupError> {
        let raw: CayleyTable = serde_json::from_str(text).map_err(|e| GroupError::Json(e.to_string()))?;
        if raw.order != raw.table.len() {
            return Err(GroupError::Json(format!(
                "order {} does not match a table with {} rows",
                raw.order,
                raw.table.len()
            )));
        }
        Group::from_table(raw.names, raw.table)
    }
}

/// Constructor selector for [`make_group`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupKind {
    Cyclic(usize),
    Klein4,
    S3,
    Q8,
    Product(Box<GroupKind>, Box<GroupKind>),
}

pub fn make_group(kind: &GroupKind) -> Result<Group, GroupError> {
    match kind {
        GroupKind::Cyclic(n) => cyclic(*n),
        GroupKind::Klein4 => klein4(),
        GroupKind::S3 => s3(),
        GroupKind::Q8 => q8(),
        GroupKind::Product(a, b) => Ok(product(&make_group(a)?, &make_group(b)?)?),
    }
}

/// `C_n` with elements `e, s, s2, …`.
pub fn cyclic(n: usize) -> Result<Group, GroupError> {
    if n == 0 {
        return Err(GroupError::InvalidTable(vec![Violation::Empty]));
    }
    if n > MAX_GROUP_ORDER {
        return Err(GroupError::OrderTooLarge(n));
    }
    let names = (0..n)
        .map(|i| match i {
            0 => "e".to_string(),
            1 => "s".to_string(),
            _ => format!("s{i}"),
        })
        .collect();
    let table = (0..n).map(|i| (0..n).map(|j| (i + j) % n).collect()).collect();
    Group::from_table(names, table)
}

pub fn klein4() -> Result<Group, GroupError> {
    let names = ["e", "a", "b", "ab"].map(String::from).to_vec();
    let table = (0..4).map(|i| (0..4).map(|j| i ^ j).collect()).collect();
    Group::from_table(names, table)
}

/// Permutations of {1,2,3}, composed right to left. With this element order
/// the regular matrix in symbols a…f is the classical displayed S3 matrix.
pub fn s3() -> Result<Group, GroupError> {
    let perms: [[usize; 3]; 6] = [[0, 1, 2], [1, 0, 2], [2, 1, 0], [0, 2, 1], [1, 2, 0], [2, 0, 1]];
    let names = ["e", "(12)", "(13)", "(23)", "(123)", "(132)"].map(String::from).to_vec();
    let index = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
    let table = perms
        .iter()
        .map(|p| perms.iter().map(|q| index([p[q[0]], p[q[1]], p[q[2]]])).collect())
        .collect();
    Group::from_table(names, table)
}

/// Quaternion group in the order 1, −1, i, −i, j, −j, k, −k (with ij = k).
pub fn q8() -> Result<Group, GroupError> {
    // unit u = (sign, letter) with letter 0=1, 1=i, 2=j, 3=k
    fn unit_mul(a: usize, b: usize) -> (bool, usize) {
        const T: [[(bool, usize); 4]; 4] = [
            [(false, 0), (false, 1), (false, 2), (false, 3)],
            [(false, 1), (true, 0), (false, 3), (true, 2)],
            [(false, 2), (true, 3), (true, 0), (false, 1)],
            [(false, 3), (false, 2), (true, 1), (true, 0)],
        ];
        T[a][b]
    }
    let names = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"].map(String::from).to_vec();
    let split = |x: usize| (x % 2 == 1, x / 2);
    let table = (0..8)
        .map(|x| {
            (0..8)
                .map(|y| {
                    let (sx, lx) = split(x);
                    let (sy, ly) = split(y);
                    let (s, l) = unit_mul(lx, ly);
                    2 * l + usize::from(sx ^ sy ^ s)
                })
                .collect()
        })
        .collect();
    Group::from_table(names, table)
}

/// Direct product; element `(g, h)` has index `g * |H| + h`.
pub fn product(g: &Group, h: &Group) -> Result<Group, GroupError> {
    let (n, m) = (g.order(), h.order());
    if n * m > MAX_GROUP_ORDER {
        return Err(GroupError::OrderTooLarge(n * m));
    }
    let names = (0..n * m).map(|i| format!("({},{})", g.name(i / m), h.name(i % m))).collect();
    let table = (0..n * m)
        .map(|x| {
            (0..n * m)
                .map(|y| g.mul(x / m, y / m) * m + h.mul(x % m, y % m))
                .collect()
        })
        .collect();
    Group::from_table(names, table)
}

/// Close `gens` under `mul` breadth-first. Returns the group table and the
/// distinct elements in discovery order, identity moved to the front.
pub fn close_generators<T, F>(gens: &[T], mul: F, bound: usize) -> Result<(Group, Vec<T>), GroupError>
where
    T: Clone + PartialEq,
    F: Fn(&T, &T) -> T,
{
    if gens.is_empty() {
        return Err(GroupError::NoGenerators);
    }
    let bound = bound.min(MAX_GROUP_ORDER);
    let mut elems: Vec<T> = Vec::new();
    for g in gens {
        if !elems.contains(g) {
            elems.push(g.clone());
        }
    }
    if elems.len() > bound {
        return Err(GroupError::BoundExceeded { bound });
    }
    let mut i = 0;
    while i < elems.len() {
        for g in gens {
            let p = mul(&elems[i], g);
            if !elems.contains(&p) {
                if elems.len() == bound {
                    return Err(GroupError::BoundExceeded { bound });
                }
                elems.push(p);
            }
        }
        i += 1;
    }
    let n = elems.len();
    let id = (0..n)
        .find(|&e| (0..n).all(|x| mul(&elems[e], &elems[x]) == elems[x]))
        .ok_or(GroupError::InvalidTable(vec![Violation::NoInverse { element: 0 }]))?;
    let id_elem = elems.remove(id);
    elems.insert(0, id_elem);
    let table: Vec<Vec<usize>> = elems
        .iter()
        .map(|a| {
            elems
                .iter()
                .map(|b| {
                    let p = mul(a, b);
                    elems.iter().position(|x| *x == p).unwrap_or(usize::MAX)
                })
                .collect()
        })
        .collect();
    if table.iter().flatten().any(|&v| v == usize::MAX) {
        return Err(GroupError::InvalidTable(vec![Violation::RowNotLatin { row: 0 }]));
    }
    let names = (0..n).map(|i| if i == 0 { "e".to_string() } else { format!("g{i}") }).collect();
    let group = Group::from_table(names, table)?;
    Ok((group, elems))
}

/// Values indexed by the elements of a group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoeffVector {
    values: Vec<RatFunc>,
}

impl CoeffVector {
    pub fn new(group: &Group, values: Vec<RatFunc>) -> Result<CoeffVector, GroupError> {
        if values.len() != group.order() {
            return Err(GroupError::LengthMismatch { expected: group.order(), got: values.len() });
        }
        Ok(CoeffVector { values })
    }

    pub fn from_ints(group: &Group, values: &[i64]) -> Result<CoeffVector, GroupError> {
        CoeffVector::new(group, values.iter().map(|&v| RatFunc::from_int(v)).collect())
    }

    /// One fresh variable per element.
    pub fn symbols(group: &Group, names: &[String]) -> Result<CoeffVector, GroupError> {
        CoeffVector::new(group, names.iter().map(|n| RatFunc::var(n)).collect())
    }

    /// The group-ring identity δ_e.
    pub fn delta_identity(group: &Group) -> CoeffVector {
        let mut values = vec![RatFunc::zero(); group.order()];
        values[0] = RatFunc::one();
        CoeffVector { values }
    }

    pub fn values(&self) -> &[RatFunc] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> &RatFunc {
        &self.values[i]
    }

    /// Reindex along with [`Group::relabel`].
    pub fn relabel(&self, perm: &[usize]) -> CoeffVector {
        CoeffVector { values: perm.iter().map(|&o| self.values[o].clone()).collect() }
    }
}

/// `M[s][t] = a[s⁻¹t]`.
pub fn regular_matrix(group: &Group, a: &CoeffVector) -> Result<PolyMatrix, GroupError> {
    check_len(group, a)?;
    let n = group.order();
    let mut m = PolyMatrix::zeros(n, n);
    for s in 0..n {
        for t in 0..n {
            m.set(s, t, a.get(group.mul(group.inv(s), t)).clone());
        }
    }
    Ok(m)
}

/// `M[s][t] = a[st⁻¹]`, the transpose-type construction.
pub fn transposed_regular_matrix(group: &Group, a: &CoeffVector) -> Result<PolyMatrix, GroupError> {
    check_len(group, a)?;
    let n = group.order();
    let mut m = PolyMatrix::zeros(n, n);
    for s in 0..n {
        for t in 0..n {
            m.set(s, t, a.get(group.mul(s, group.inv(t))).clone());
        }
    }
    Ok(m)
}

pub(crate) fn check_len(group: &Group, a: &CoeffVector) -> Result<(), GroupError> {
    if a.len() != group.order() {
        return Err(GroupError::LengthMismatch { expected: group.order(), got: a.len() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_three() {
        let g = cyclic(3).unwrap();
        assert_eq!(g.mul(1, 2), 0);
        assert_eq!(g.names(), ["e", "s", "s2"]);
        assert_eq!(g.exponent(), 3);
    }

    #[test]
    fn klein_is_elementary() {
        let g = klein4().unwrap();
        assert!((1..4).all(|i| g.inv(i) == i));
        assert!(g.is_abelian());
    }

    #[test]
    fn product_of_c2s_is_klein() {
        let c2 = cyclic(2).unwrap();
        let p = product(&c2, &c2).unwrap();
        // (x,y) -> 2x+y agrees with xor on {0,1}^2
        assert_eq!(p.table(), klein4().unwrap().table());
    }

    #[test]
    fn s3_and_q8_are_nonabelian() {
        let s = s3().unwrap();
        assert!(!s.is_abelian());
        assert_eq!(s.order(), 6);
        let q = q8().unwrap();
        assert!(!q.is_abelian());
        assert_eq!(q.mul(2, 4), 6, "ij = k");
        assert_eq!(q.mul(4, 2), 7, "ji = -k");
        assert_eq!(q.mul(2, 2), 1, "i^2 = -1");
        assert_eq!(q.exponent(), 4);
    }

    #[test]
    fn validate_examples() {
        assert!(validate_group(cyclic(4).unwrap().table()).is_empty());
        let mut t = cyclic(3).unwrap().table().to_vec();
        t[1][1] = 1;
        let v = validate_group(&t);
        assert!(v.contains(&Violation::RowNotLatin { row: 1 }), "{v:?}");
        let v = validate_group(&[vec![0, 1], vec![1, 1]]);
        assert!(v.contains(&Violation::RowNotLatin { row: 1 }));
        assert!(v.contains(&Violation::ColumnNotLatin { col: 1 }));
        assert_eq!(validate_group(&[vec![0, 2]]), vec![Violation::NotSquare { row: 0, len: 2 }]);
    }

    #[test]
    fn latin_but_not_associative() {
        // a Latin square loop of order 5 with identity 0 that is not a group
        let t = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        let v = validate_group(&t);
        assert!(v.iter().all(|x| matches!(x, Violation::NotAssociative { .. })));
        assert!(!v.is_empty());
    }

    #[test]
    fn closure_of_integers_mod_bound() {
        let mulmod = |a: &u32, b: &u32| (a * b) % 7;
        let (g, elems) = close_generators(&[3u32], mulmod, 64).unwrap();
        assert_eq!(g.order(), 6);
        assert_eq!(elems[0], 1);
        let addn = |a: &i64, b: &i64| a + b;
        assert_eq!(
            close_generators(&[1i64], addn, 10).unwrap_err(),
            GroupError::BoundExceeded { bound: 10 }
        );
    }

    #[test]
    fn regular_matrix_identity_vector() {
        let g = s3().unwrap();
        let m = regular_matrix(&g, &CoeffVector::delta_identity(&g)).unwrap();
        assert_eq!(m, PolyMatrix::identity(6));
    }

    #[test]
    fn json_round_trip() {
        let g = q8().unwrap();
        let back = Group::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
        assert!(matches!(
            Group::from_json(r#"{"order":2,"names":["e","x"],"table":[[0,1],[1,1]]}"#),
            Err(GroupError::InvalidTable(_))
        ));
        assert!(matches!(Group::from_json("[1,2]"), Err(GroupError::Json(_))));
    }

    #[test]
    fn relabel_keeps_structure() {
        let g = s3().unwrap();
        let h = g.relabel(&[0, 4, 2, 5, 1, 3]).unwrap();
        assert_eq!(h.name(1), "(123)");
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(h.name(h.mul(i, j)), g.name(g.mul(g.index_of(h.name(i)).unwrap(), g.index_of(h.name(j)).unwrap())));
            }
        }
    }
}
