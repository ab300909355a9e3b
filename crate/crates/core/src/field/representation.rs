use crate::error::{Error, Result};
use crate::geom::{SurfaceComplex, Topology};
use crate::su2::{Alg, Su2};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// A word in the generators: `(generator, ±1)` letters, multiplied left to right.
pub type Word = &'static [(&'static str, i8)];

/// Derived loops of each topology as words in the free generators. Each word reproduces the
/// exact based holonomy of the corresponding loop of the complex for a flat connection.
pub fn derived_words(t: Topology) -> &'static [(&'static str, Word)] {
    match t {
        Topology::Torus => &[],
        Topology::OneHoledTorusPunctured => &[("c_p", &[("a", 1), ("b", 1), ("a", -1), ("b", -1)])],
        Topology::Genus2SeparatingPinch => &[
            (
                "c_p",
                &[
                    ("a1", 1),
                    ("b1", 1),
                    ("a2", -1),
                    ("b2", -1),
                    ("a2", 1),
                    ("b2", 1),
                    ("a1", -1),
                    ("b1", -1),
                ],
            ),
            ("c", &[("a2", -1), ("b2", -1), ("a2", 1), ("b2", 1)]),
        ],
    }
}

pub fn generator_names(t: Topology) -> &'static [&'static str] {
    match t {
        Topology::Torus | Topology::OneHoledTorusPunctured => &["a", "b"],
        Topology::Genus2SeparatingPinch => &["a1", "b1", "a2", "b2"],
    }
}

/// Matrices on named loops, up to overall conjugation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representation {
    pub topology: Topology,
    pub loops: BTreeMap<String, Su2>,
}

fn eval_word(loops: &BTreeMap<String, Su2>, w: Word) -> Option<Su2> {
    let mut acc = Su2::IDENTITY;
    for &(g, e) in w {
        let u = *loops.get(g)?;
        acc = acc * if e > 0 { u } else { u.inv() };
    }
    Some(acc)
}

impl Representation {
    /// Fills in the derived loops from the generator words.
    pub fn from_generators(topology: Topology, gens: &[(&str, Su2)]) -> Self {
        let mut loops: BTreeMap<String, Su2> =
            gens.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (name, w) in derived_words(topology) {
            if let Some(v) = eval_word(&loops, w) {
                loops.insert(name.to_string(), v);
            }
        }
        Self { topology, loops }
    }

    pub fn trivial(s: &SurfaceComplex) -> Self {
        let gens: Vec<(&str, Su2)> = generator_names(s.spec.topology)
            .iter()
            .map(|&g| (g, Su2::IDENTITY))
            .collect();
        Self::from_generators(s.spec.topology, &gens)
    }

    /// Largest mismatch between a derived loop and its word (and, on the closed torus, of the
    /// commutator relation).
    pub fn relation_residual(&self) -> f64 {
        let mut r: f64 = 0.0;
        if self.topology == Topology::Torus {
            if let (Some(a), Some(b)) = (self.loops.get("a"), self.loops.get("b")) {
                r = r.max((*a * *b * a.inv() * b.inv()).dist(&Su2::IDENTITY));
            }
        }
        for (name, w) in derived_words(self.topology) {
            if let (Some(v), Some(x)) = (self.loops.get(*name), eval_word(&self.loops, w)) {
                r = r.max(v.dist(&x));
            }
        }
        r
    }

    pub fn get(&self, name: &str) -> Result<Su2> {
        self.loops
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingLoop(name.to_string()))
    }

    /// Puncture weight read from the puncture loop, `|log ρ(c_p)| / 2π`.
    pub fn alpha(&self) -> Option<f64> {
        self.loops.get("c_p").map(|u| u.angle() / (2.0 * PI))
    }

    pub fn conjugate(&self, g: Su2) -> Self {
        Self {
            topology: self.topology,
            loops: self
                .loops
                .iter()
                .map(|(k, v)| (k.clone(), g * *v * g.inv()))
                .collect(),
        }
    }

    /// Traces of the loops and of consecutive products `ρ(l_i) ρ(l_{i+1})`.
    pub fn conjugacy_invariants(&self, names: &[&str]) -> Result<Vec<f64>> {
        let mats: Vec<Su2> = names.iter().map(|n| self.get(n)).collect::<Result<_>>()?;
        let mut out: Vec<f64> = mats.iter().map(|m| m.trace()).collect();
        for w in mats.windows(2) {
            out.push((w[0] * w[1]).trace());
        }
        Ok(out)
    }

    /// Generic irreducible pair on the punctured torus with puncture weight `alpha`; `s` and
    /// `t` select a point of the relative character variety.
    pub fn punctured_torus(alpha: f64, s: f64, t: f64) -> Result<Self> {
        // c_p = [a, b].
        let target = Su2::diag(2.0 * PI * alpha);
        let (a, b) = commutator_pair(target, s, t)?;
        Ok(Self::from_generators(
            Topology::OneHoledTorusPunctured,
            &[("a", a), ("b", b)],
        ))
    }

    /// Genus-2 representation with puncture weight `alpha`, irreducible on both sides of the
    /// pinch; `seed` varies the choice.
    pub fn genus2_generic(alpha: f64, seed: u64) -> Result<Self> {
        let k = seed as f64;
        let c_target = Su2::exp(Alg::new(0.35 + 0.1 * (k * 0.7).sin(), 0.2, 0.9 + 0.05 * k.cos()));
        let (x2, y2) = commutator_pair(c_target, 0.9 + 0.03 * k.sin(), 0.4 + 0.1 * k)?;
        // c = [a2⁻¹, b2⁻¹].
        let (a2, b2) = (x2.inv(), y2.inv());
        let c = c_target;
        // c_p = a1 b1 c a1⁻¹ b1⁻¹ is conjugate to c [a1⁻¹, b1⁻¹].
        let h = Su2::exp(Alg::new(0.3, -0.5 + 0.05 * k, 0.2));
        let target1 = c.inv() * h * Su2::diag(2.0 * PI * alpha) * h.inv();
        let (x1, y1) = commutator_pair(target1, 1.1 + 0.02 * k, -0.3 + 0.07 * k)?;
        Ok(Self::from_generators(
            Topology::Genus2SeparatingPinch,
            &[("a1", x1.inv()), ("b1", y1.inv()), ("a2", a2), ("b2", b2)],
        ))
    }

    /// Accidentally reducible genus-2 representation with trivial puncture: each side abelian,
    /// in different maximal tori.
    pub fn genus2_accidentally_reducible(angles: [f64; 4], axis: Alg) -> Self {
        let n = axis.scale(1.0 / axis.norm());
        Self::from_generators(
            Topology::Genus2SeparatingPinch,
            &[
                ("a1", Su2::diag(angles[0])),
                ("b1", Su2::diag(angles[1])),
                ("a2", Su2::exp(n.scale(angles[2]))),
                ("b2", Su2::exp(n.scale(angles[3]))),
            ],
        )
    }

    pub fn to_json(&self) -> Result<String> {
        let m: BTreeMap<&String, [f64; 8]> = self
            .loops
            .iter()
            .map(|(k, v)| {
                let a = v.to_matrix();
                (
                    k,
                    [
                        a[0][0].re, a[0][0].im, a[0][1].re, a[0][1].im, a[1][0].re, a[1][0].im,
                        a[1][1].re, a[1][1].im,
                    ],
                )
            })
            .collect();
        let doc = serde_json::json!({ "topology": self.topology, "loops": m });
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            topology: Topology,
            loops: BTreeMap<String, [f64; 8]>,
        }
        let d: Doc = serde_json::from_str(text)?;
        let loops = d
            .loops
            .into_iter()
            .map(|(k, a)| {
                use num_complex::Complex64 as C;
                let m = [
                    [C::new(a[0], a[1]), C::new(a[2], a[3])],
                    [C::new(a[4], a[5]), C::new(a[6], a[7])],
                ];
                (k, Su2::from_matrix(&m))
            })
            .collect();
        Ok(Self {
            topology: d.topology,
            loops,
        })
    }
}

/// A pair `(x, y)` with `x y x⁻¹ y⁻¹ = target` exactly; irreducible unless `target = ±I`.
///
/// `x` has angle `s`, `y` is `y₀ exp(t n)` with `n` the axis of `x`.
pub fn commutator_pair(target: Su2, s: f64, t: f64) -> Result<(Su2, Su2)> {
    let r = target.angle();
    let ss = s.sin();
    if ss.abs() < 1e-6 {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            range: "sin s != 0",
        });
    }
    // Re(x · y x⁻¹ y⁻¹) = cos²s + sin²s cos ψ with ψ the angle between the axes of x and y x y⁻¹.
    let cos_psi = (r.cos() - s.cos().powi(2)) / (ss * ss);
    if !(-1.0..=1.0).contains(&cos_psi) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            range: "cos r >= cos 2s",
        });
    }
    let psi = cos_psi.acos();
    let x = Su2::exp(Alg::new(0.0, 0.0, s));
    // Rotation by ψ about the x-axis in algebra coordinates carries e3 to an axis at angle ψ.
    let y0 = Su2::exp(Alg::new(0.5 * psi, 0.0, 0.0));
    let y = y0 * Su2::exp(Alg::new(0.0, 0.0, t));
    let k = x * y * x.inv() * y.inv();
    let g = aligning_rotation(&k, &target);
    Ok((g * x * g.inv(), g * y * g.inv()))
}

/// Some `g` with `g from g⁻¹ = to`, assuming equal traces. Picks the smallest rotation.
pub fn aligning_rotation(from: &Su2, to: &Su2) -> Su2 {
    let a = from.log();
    let b = to.log();
    let (na, nb) = (a.norm(), b.norm());
    if na < 1e-14 || nb < 1e-14 {
        return Su2::IDENTITY;
    }
    let u = a.scale(1.0 / na);
    let v = b.scale(1.0 / nb);
    rotation_taking(&u, &v)
}

/// Unit quaternion whose adjoint action takes unit vector `u` to unit vector `v`, by the
/// minimal angle.
pub fn rotation_taking(u: &Alg, v: &Alg) -> Su2 {
    let c = u.dot(v);
    if c > 1.0 - 1e-15 {
        return Su2::IDENTITY;
    }
    let axis = if c < -1.0 + 1e-12 {
        let t = if u.0[0].abs() < 0.9 {
            Alg::new(1.0, 0.0, 0.0)
        } else {
            Alg::new(0.0, 1.0, 0.0)
        };
        let w = u.cross(&t);
        w.scale(1.0 / w.norm())
    } else {
        let w = u.cross(v);
        w.scale(1.0 / w.norm())
    };
    let angle = c.clamp(-1.0, 1.0).acos();
    // Ad_{exp(ξ)} rotates by 2|ξ|; the sign is fixed by checking the image.
    let g = Su2::exp(axis.scale(0.5 * angle));
    if (g.adjoint(u) - *v).norm() < 1e-9 {
        g
    } else {
        Su2::exp(axis.scale(-0.5 * angle))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reducibility {
    Irreducible,
    Reducible,
    Central,
}

impl Reducibility {
    pub fn is_reducible(self) -> bool {
        !matches!(self, Reducibility::Irreducible)
    }
}

/// Dimension of the complex commutant `{M ∈ gl(2,C) : [M, g] = 0 for all g}`.
pub fn commutant_dimension(mats: &[Su2], tol: f64) -> usize {
    if mats.is_empty() {
        return 4;
    }
    // Unknown M = Σ m_k E_k with real coordinates (Re, Im of each entry).
    let mut rows = DMatrix::<f64>::zeros(8 * mats.len(), 8);
    for (gi, g) in mats.iter().enumerate() {
        let gm = g.to_matrix();
        for k in 0..8 {
            let mut m = [[num_complex::Complex64::new(0.0, 0.0); 2]; 2];
            let (r, c) = ((k / 2) / 2, (k / 2) % 2);
            m[r][c] = if k % 2 == 0 {
                num_complex::Complex64::new(1.0, 0.0)
            } else {
                num_complex::Complex64::new(0.0, 1.0)
            };
            let comm = crate::su2::mat_sub(
                &crate::su2::mat_mul(&m, &gm),
                &crate::su2::mat_mul(&gm, &m),
            );
            for (q, z) in comm.iter().flatten().enumerate() {
                rows[(8 * gi + 2 * q, k)] = z.re;
                rows[(8 * gi + 2 * q + 1, k)] = z.im;
            }
        }
    }
    let sv = rows.singular_values();
    let rank = sv.iter().filter(|&&x| x > tol).count();
    // Real nullity is twice the complex dimension.
    (8 - rank) / 2
}

pub fn reducibility(mats: &[Su2], tol: f64) -> Reducibility {
    let central = mats
        .iter()
        .all(|g| g.dist(&Su2::IDENTITY) < tol || g.dist(&Su2::MINUS_IDENTITY) < tol);
    if central {
        return Reducibility::Central;
    }
    if commutant_dimension(mats, tol) >= 2 {
        Reducibility::Reducible
    } else {
        Reducibility::Irreducible
    }
}

/// Per-component reducibility on the surface cut along its pinching curves, and the overall
/// flag (every component reducible).
pub fn accidental_reducibility(
    rep: &Representation,
    s: &SurfaceComplex,
    tol: f64,
) -> Result<(Vec<bool>, bool)> {
    let mut per = Vec::new();
    for comp in &s.component_loops {
        let mats: Vec<Su2> = comp.iter().map(|n| rep.get(n)).collect::<Result<_>>()?;
        per.push(reducibility(&mats, tol).is_reducible());
    }
    let all = !per.is_empty() && per.iter().all(|&r| r);
    Ok((per, all))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{build_surface, SurfaceSpec};
    use proptest::prelude::*;

    #[test]
    fn reducibility_examples() {
        let diag = [Su2::diag(0.3), Su2::diag(1.2)];
        assert_eq!(reducibility(&diag, 1e-9), Reducibility::Reducible);
        let a = Su2::exp(Alg::new(0.0, 0.0, PI / 4.0));
        let b = Su2::exp(Alg::new(PI / 4.0, 0.0, 0.0));
        assert_eq!(commutant_dimension(&[a, b], 1e-9), 1);
        assert_eq!(reducibility(&[a, b], 1e-9), Reducibility::Irreducible);
        assert_eq!(
            reducibility(&[Su2::IDENTITY, Su2::MINUS_IDENTITY], 1e-9),
            Reducibility::Central
        );
        for tol in [1e-8, 1e-9, 1e-10] {
            assert_eq!(reducibility(&[a, b], tol), Reducibility::Irreducible);
            assert_eq!(reducibility(&diag, tol), Reducibility::Reducible);
        }
    }

    #[test]
    fn commutator_pair_hits_target() {
        let t = Su2::exp(Alg::new(0.3, -0.4, 1.0));
        let (x, y) = commutator_pair(t, 1.0, 0.3).unwrap();
        assert!((x * y * x.inv() * y.inv()).dist(&t) < 1e-12);
        assert_eq!(reducibility(&[x, y], 1e-9), Reducibility::Irreducible);
    }

    #[test]
    fn punctured_torus_rep_has_weight() {
        let r = Representation::punctured_torus(0.3, 1.3, 0.2).unwrap();
        assert!((r.alpha().unwrap() - 0.3).abs() < 1e-12);
        assert!((r.get("c_p").unwrap().trace() - 2.0 * (0.6 * PI).cos()).abs() < 1e-12);
        assert!(r.relation_residual() < 1e-14);
    }

    #[test]
    fn accidental_reducibility_flags() {
        let s = build_surface(SurfaceSpec::genus2(16, 4)).unwrap();
        let ar = Representation::genus2_accidentally_reducible(
            [0.4, 1.1, 0.7, -0.5],
            Alg::new(1.0, 0.2, 0.0),
        );
        let all: Vec<Su2> = ["a1", "b1", "a2", "b2"].iter().map(|n| ar.get(n).unwrap()).collect();
        assert_eq!(reducibility(&all, 1e-9), Reducibility::Irreducible);
        assert_eq!(accidental_reducibility(&ar, &s, 1e-9).unwrap(), (vec![true, true], true));

        let g = Representation::genus2_generic(0.3, 1).unwrap();
        let (per, flag) = accidental_reducibility(&g, &s, 1e-9).unwrap();
        assert_eq!(per, vec![false, false]);
        assert!(!flag);

        let globally = Representation::from_generators(
            s.spec.topology,
            &[("a1", Su2::diag(0.1)), ("b1", Su2::diag(0.2)), ("a2", Su2::diag(0.3)), ("b2", Su2::diag(0.4))],
        );
        assert!(accidental_reducibility(&globally, &s, 1e-9).unwrap().1);

        // Irreducible on the puncture side, reducible on the other: not accidentally reducible.
        let (x, y) = commutator_pair(Su2::diag(0.9), 1.0, 0.2).unwrap();
        let mixed = Representation::from_generators(
            s.spec.topology,
            &[("a1", x), ("b1", y), ("a2", Su2::diag(0.3)), ("b2", Su2::diag(0.4))],
        );
        assert_eq!(accidental_reducibility(&mixed, &s, 1e-9).unwrap(), (vec![false, true], false));
    }

    #[test]
    fn pair_traces_separate_types() {
        let s1 = Su2::exp(Alg::new(PI / 2.0, 0.0, 0.0));
        let s2 = Su2::exp(Alg::new(0.0, PI / 2.0, 0.0));
        let r1 = Representation::from_generators(Topology::Torus, &[("a", s1), ("b", s2)]);
        let r2 = Representation::from_generators(Topology::Torus, &[("a", s1), ("b", s1)]);
        let i1 = r1.conjugacy_invariants(&["a", "b"]).unwrap();
        let i2 = r2.conjugacy_invariants(&["a", "b"]).unwrap();
        assert!((i1[0] - i2[0]).abs() < 1e-12 && (i1[1] - i2[1]).abs() < 1e-12);
        assert!((i1[2] - i2[2]).abs() > 1.0);
        let triv = Representation::from_generators(
            Topology::Torus,
            &[("a", Su2::IDENTITY), ("b", Su2::IDENTITY)],
        );
        assert!(triv.conjugacy_invariants(&["a", "b"]).unwrap().iter().all(|&t| (t - 2.0).abs() < 1e-15));
    }

    #[test]
    fn json_roundtrip() {
        let r = Representation::genus2_generic(0.25, 2).unwrap();
        let back = Representation::from_json(&r.to_json().unwrap()).unwrap();
        for (k, v) in &r.loops {
            assert!(back.loops[k].dist(v) < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn invariants_are_conjugation_invariant(seed in 0u64..200) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let r = Representation::genus2_generic(0.3, seed % 7).unwrap();
            let g = Su2::random(&mut rng);
            let names = ["a1", "b1", "a2", "b2", "c"];
            let a = r.conjugacy_invariants(&names).unwrap();
            let b = r.conjugate(g).conjugacy_invariants(&names).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            let mats: Vec<Su2> = names.iter().map(|n| r.get(n).unwrap()).collect();
            let conj: Vec<Su2> = mats.iter().map(|m| g * *m * g.inv()).collect();
            prop_assert_eq!(reducibility(&mats, 1e-9), reducibility(&conj, 1e-9));
        }
    }
}
