//! Group actions on the domain (Möbius maps, or the formal swap z ↔ zbar)
//! and on values (Galois automorphisms plus conjugate-variable swap).

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::dsl;
use crate::exactnum::{Cyc, NumError};
use crate::groups::{self, close_generators, Group, GroupError};
use crate::polyfunc::{MPoly, PolyError, RatFunc};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ActionError {
    #[error("degenerate Möbius map: ad - bc = 0")]
    Degenerate,
    #[error("not a Möbius map in {var}: {text}")]
    NotMoebius { var: String, text: String },
    #[error("action is not a homomorphism at ({0}, {1})")]
    NotHomomorphism(usize, usize),
    #[error("{0}")]
    Group(#[from] GroupError),
    #[error("{0}")]
    Poly(#[from] PolyError),
    #[error("{0}")]
    Num(#[from] NumError),
    #[error("element {0} is out of range")]
    NoSuchElement(usize),
}

/// `t ↦ (a·t + b)/(c·t + d)`, scaled so the first nonzero entry is 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoebiusMap {
    a: Cyc,
    b: Cyc,
    c: Cyc,
    d: Cyc,
}

impl MoebiusMap {
    pub fn new(a: Cyc, b: Cyc, c: Cyc, d: Cyc) -> Result<MoebiusMap, ActionError> {
        if (&a * &d - &b * &c).is_zero() {
            return Err(ActionError::Degenerate);
        }
        let lead = [&a, &b, &c, &d].into_iter().find(|x| !x.is_zero()).unwrap().inv()?;
        Ok(MoebiusMap { a: &a * &lead, b: &b * &lead, c: &c * &lead, d: &d * &lead })
    }

    pub fn from_ints(a: i64, b: i64, c: i64, d: i64) -> Result<MoebiusMap, ActionError> {
        MoebiusMap::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn identity() -> MoebiusMap {
        MoebiusMap::from_ints(1, 0, 0, 1).unwrap()
    }

    pub fn entries(&self) -> [&Cyc; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn is_identity(&self) -> bool {
        *self == MoebiusMap::identity()
    }

    /// `self ∘ other`: first `other`, then `self`.
    pub fn compose(&self, other: &MoebiusMap) -> MoebiusMap {
        let (a, b, c, d) = (&self.a, &self.b, &self.c, &self.d);
        let (p, q, r, s) = (&other.a, &other.b, &other.c, &other.d);
        MoebiusMap::new(a * p + b * r, a * q + b * s, c * p + d * r, c * q + d * s)
            .expect("product of invertible matrices is invertible")
    }

    pub fn inverse(&self) -> MoebiusMap {
        MoebiusMap::new(self.d.clone(), -&self.b, -&self.c, self.a.clone())
            .expect("inverse of an invertible matrix")
    }

    pub fn as_ratfunc(&self, var: &str) -> RatFunc {
        let t = MPoly::var(var);
        let num = &t.scale(&self.a) + &MPoly::constant(self.b.clone());
        let den = &t.scale(&self.c) + &MPoly::constant(self.d.clone());
        RatFunc::new(num, den).expect("denominator of a Möbius map is nonzero")
    }

    /// Monic `c·t + d` when the map has a finite pole.
    pub fn pole(&self, var: &str) -> Option<MPoly> {
        if self.c.is_zero() {
            return None;
        }
        let p = &MPoly::var(var).scale(&self.c) + &MPoly::constant(self.d.clone());
        Some(p.monic())
    }

    /// Recognise a rational function of degree at most one in `var`.
    pub fn from_ratfunc(f: &RatFunc, var: &str) -> Option<MoebiusMap> {
        let linear = |p: &MPoly| {
            let ok = p.vars().iter().all(|v| v == var) && p.degree_in(var) <= 1;
            ok.then(|| (p.coeff_of(&[(var, 1)]), p.coeff_of(&[])))
        };
        let (a, b) = linear(f.num())?;
        let (c, d) = linear(f.den())?;
        MoebiusMap::new(a, b, c, d).ok()
    }

    pub fn parse(text: &str, var: &str) -> Result<MoebiusMap, ActionError> {
        let not_moebius = || ActionError::NotMoebius { var: var.to_string(), text: text.to_string() };
        let f = dsl::parse_ratfunc(text).map_err(|_| not_moebius())?;
        MoebiusMap::from_ratfunc(&f, var).ok_or_else(not_moebius)
    }

    /// Render in the expression language, e.g. `(t-1)/t`.
    pub fn render(&self, var: &str) -> String {
        self.as_ratfunc(var).render_with(&dsl::render_cyc)
    }
}

impl fmt::Display for MoebiusMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render("t"))
    }
}

/// Zero-sets of univariate polynomials removed from the domain.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PunctureSet {
    polys: Vec<MPoly>,
}

impl PunctureSet {
    pub fn new() -> PunctureSet {
        PunctureSet::default()
    }

    /// Adds the monic version of `p`; constants and duplicates are ignored.
    pub fn insert(&mut self, p: MPoly) {
        if p.is_constant() {
            return;
        }
        let p = p.monic();
        if !self.polys.contains(&p) {
            self.polys.push(p);
        }
    }

    pub fn union(&self, other: &PunctureSet) -> PunctureSet {
        let mut out = self.clone();
        for p in &other.polys {
            out.insert(p.clone());
        }
        out
    }

    pub fn polys(&self) -> &[MPoly] {
        &self.polys
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    /// The first polynomial vanishing at `point`, if any. Polynomials that
    /// mention variables missing from `point` are skipped.
    pub fn hit(&self, point: &HashMap<String, Cyc>) -> Option<&MPoly> {
        self.polys.iter().find(|p| matches!(p.eval(point), Ok(v) if v.is_zero()))
    }
}

impl fmt::Display for PunctureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.polys.iter().map(|p| format!("{p}=0")).collect();
        write!(f, "{{{}}}", items.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VariableModel {
    /// One domain variable acted on by Möbius maps.
    Single(String),
    /// A variable and its formal conjugate, exchanged by the swap.
    Pair { z: String, zbar: String },
}

impl VariableModel {
    pub fn pair(z: &str) -> VariableModel {
        VariableModel::Pair { z: z.to_string(), zbar: conjugate_name(z) }
    }

    pub fn variables(&self) -> Vec<&str> {
        match self {
            VariableModel::Single(v) => vec![v.as_str()],
            VariableModel::Pair { z, zbar } => vec![z.as_str(), zbar.as_str()],
        }
    }
}

/// Partner of a variable under the conjugate swap: `a ↔ abar`.
pub fn conjugate_name(v: &str) -> String {
    match v.strip_suffix("bar") {
        Some(base) if !base.is_empty() => base.to_string(),
        _ => format!("{v}bar"),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DomainMaps {
    Moebius(Vec<MoebiusMap>),
    /// Per element: whether it swaps z and zbar.
    Swap(Vec<bool>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainAction {
    group: Group,
    model: VariableModel,
    maps: DomainMaps,
}

impl DomainAction {
    pub fn new(group: Group, model: VariableModel, maps: DomainMaps) -> Result<DomainAction, ActionError> {
        let len = match &maps {
            DomainMaps::Moebius(m) => m.len(),
            DomainMaps::Swap(s) => s.len(),
        };
        if len != group.order() {
            return Err(GroupError::LengthMismatch { expected: group.order(), got: len }.into());
        }
        let act = DomainAction { group, model, maps };
        act.check_homomorphism()?;
        Ok(act)
    }

    /// The trivial group acting trivially.
    pub fn trivial(model: VariableModel) -> DomainAction {
        let group = groups::cyclic(1).unwrap();
        let maps = match model {
            VariableModel::Single(_) => DomainMaps::Moebius(vec![MoebiusMap::identity()]),
            VariableModel::Pair { .. } => DomainMaps::Swap(vec![false]),
        };
        DomainAction { group, model, maps }
    }

    /// C2 exchanging z and zbar.
    pub fn swap(z: &str) -> DomainAction {
        let group = groups::cyclic(2).unwrap();
        DomainAction { group, model: VariableModel::pair(z), maps: DomainMaps::Swap(vec![false, true]) }
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn model(&self) -> &VariableModel {
        &self.model
    }

    pub fn maps(&self) -> &DomainMaps {
        &self.maps
    }

    pub fn moebius(&self, g: usize) -> Option<&MoebiusMap> {
        match &self.maps {
            DomainMaps::Moebius(m) => m.get(g),
            DomainMaps::Swap(_) => None,
        }
    }

    /// Checks `map(g₁g₂) = map(g₁) ∘ map(g₂)` for every pair.
    pub fn check_homomorphism(&self) -> Result<(), ActionError> {
        let n = self.group.order();
        for g1 in 0..n {
            for g2 in 0..n {
                let g = self.group.mul(g1, g2);
                let ok = match &self.maps {
                    DomainMaps::Moebius(m) => m[g] == m[g1].compose(&m[g2]),
                    DomainMaps::Swap(s) => s[g] == (s[g1] ^ s[g2]),
                };
                if !ok {
                    return Err(ActionError::NotHomomorphism(g1, g2));
                }
            }
        }
        let identity_ok = match &self.maps {
            DomainMaps::Moebius(m) => m[0].is_identity(),
            DomainMaps::Swap(s) => !s[0],
        };
        if !identity_ok {
            return Err(ActionError::NotHomomorphism(0, 0));
        }
        Ok(())
    }

    /// Union of the pole sets of all maps.
    pub fn punctures(&self) -> PunctureSet {
        let mut set = PunctureSet::new();
        if let (DomainMaps::Moebius(maps), VariableModel::Single(v)) = (&self.maps, &self.model) {
            for m in maps {
                if let Some(p) = m.pole(v) {
                    set.insert(p);
                }
            }
        }
        set
    }

    /// Label of an element as a map, e.g. `1/t` or `zbar`.
    pub fn label(&self, g: usize) -> String {
        match (&self.maps, &self.model) {
            (DomainMaps::Moebius(m), VariableModel::Single(v)) => m[g].render(v),
            (DomainMaps::Swap(s), VariableModel::Pair { z, zbar }) => {
                if s[g] { zbar.clone() } else { z.clone() }
            }
            _ => self.group.name(g).to_string(),
        }
    }
}

/// Close Möbius generators under composition. The group element order is the
/// discovery order with the identity first.
pub fn build_domain_action(
    gens: &[MoebiusMap],
    var: &str,
    bound: usize,
) -> Result<(Group, DomainAction, PunctureSet), ActionError> {
    let (group, elems) = close_generators(gens, |x, y| x.compose(y), bound)?;
    let action = DomainAction::new(group.clone(), VariableModel::Single(var.to_string()), DomainMaps::Moebius(elems))?;
    let punctures = action.punctures();
    Ok((group, action, punctures))
}

/// S3 as the six maps t, 1−t, 1/t, 1/(1−t), t/(t−1), (t−1)/t, in that order.
pub fn s3_moebius(var: &str) -> Result<(Group, DomainAction, PunctureSet), ActionError> {
    let maps = [(1, 0, 0, 1), (-1, 1, 0, 1), (0, 1, 1, 0), (0, 1, -1, 1), (1, 0, 1, -1), (1, -1, 1, 0)]
        .map(|(a, b, c, d)| MoebiusMap::from_ints(a, b, c, d).unwrap());
    build_domain_action(&maps, var, 6)
}

pub fn apply_domain(act: &DomainAction, g: usize, expr: &RatFunc) -> Result<RatFunc, ActionError> {
    if g >= act.group.order() {
        return Err(ActionError::NoSuchElement(g));
    }
    match (&act.maps, &act.model) {
        (DomainMaps::Moebius(m), VariableModel::Single(v)) => {
            if m[g].is_identity() {
                return Ok(expr.clone());
            }
            let subst = HashMap::from([(v.clone(), m[g].as_ratfunc(v))]);
            Ok(expr.compose(&subst)?)
        }
        (DomainMaps::Swap(s), VariableModel::Pair { z, zbar }) => {
            if !s[g] {
                return Ok(expr.clone());
            }
            let map = HashMap::from([(z.clone(), zbar.clone()), (zbar.clone(), z.clone())]);
            Ok(expr.rename(&map))
        }
        _ => unreachable!("constructors pair maps with a matching model"),
    }
}

/// Per element: Galois exponent `k` and a swap flag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageAction {
    group: Group,
    elems: Vec<(i64, bool)>,
    field_order: u32,
}

impl ImageAction {
    pub fn new(group: Group, elems: Vec<(i64, bool)>, field_order: u32) -> Result<ImageAction, ActionError> {
        if elems.len() != group.order() {
            return Err(GroupError::LengthMismatch { expected: group.order(), got: elems.len() }.into());
        }
        let n = i64::from(field_order);
        for &(k, _) in &elems {
            if num_integer::gcd(k, n) != 1 {
                return Err(NumError::NotCoprime { k, order: field_order }.into());
            }
        }
        let act = ImageAction { group, elems, field_order };
        let g = &act.group;
        for h1 in 0..g.order() {
            for h2 in 0..g.order() {
                let (k1, s1) = act.elems[h1];
                let (k2, s2) = act.elems[h2];
                let (k, s) = act.elems[g.mul(h1, h2)];
                if (k - k1 * k2).rem_euclid(n) != 0 || s != (s1 ^ s2) {
                    return Err(ActionError::NotHomomorphism(h1, h2));
                }
            }
        }
        if act.elems[0].0.rem_euclid(n) != 1 % n || act.elems[0].1 {
            return Err(ActionError::NotHomomorphism(0, 0));
        }
        Ok(act)
    }

    pub fn trivial() -> ImageAction {
        ImageAction { group: groups::cyclic(1).unwrap(), elems: vec![(1, false)], field_order: 1 }
    }

    /// C2 acting by complex conjugation with the conjugate swap.
    pub fn conjugation() -> ImageAction {
        ImageAction { group: groups::cyclic(2).unwrap(), elems: vec![(1, false), (-1, true)], field_order: 1 }
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn element(&self, h: usize) -> (i64, bool) {
        self.elems[h]
    }

    pub fn is_trivial(&self) -> bool {
        self.group.order() == 1
    }
}

pub fn apply_image(act: &ImageAction, h: usize, expr: &RatFunc) -> Result<RatFunc, ActionError> {
    let &(k, swap) = act.elems.get(h).ok_or(ActionError::NoSuchElement(h))?;
    let mut out = if k == 1 { expr.clone() } else { expr.galois(k)? };
    if swap {
        let map: HashMap<String, String> =
            out.vars().into_iter().map(|v| (v.clone(), conjugate_name(&v))).collect();
        out = out.rename(&map);
    }
    Ok(out)
}
