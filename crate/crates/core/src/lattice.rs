//! Diamond-cubic supercells, G-center embedding, and enumeration of the
//! vacancy sites and tetrahedral voids around it.
//!
//! Positions are fractional coordinates of the supercell, wrapped into
//! `[0, 1)`. Distances use the periodic minimum-image convention.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub const SILICON_LATTICE_CONSTANT_NM: f64 = 0.5431;

pub type Frac = [f64; 3];

const FCC_BASIS: [Frac; 4] = [
    [0.0, 0.0, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
    [0.5, 0.5, 0.0],
];

/// Offset of the second FCC sublattice of diamond.
const DIAMOND_SHIFT: Frac = [0.25, 0.25, 0.25];

/// Offset of the unfilled FCC tetrahedral holes.
const VOID_SHIFT: Frac = [0.75, 0.75, 0.75];

#[derive(Debug, Clone, PartialEq)]
pub struct SupercellGeometry {
    repeats: usize,
    lattice_constant_nm: f64,
    atom_positions: Vec<Frac>,
}

impl SupercellGeometry {
    pub fn repeats(&self) -> usize {
        self.repeats
    }

    pub fn lattice_constant_nm(&self) -> f64 {
        self.lattice_constant_nm
    }

    pub fn atom_positions(&self) -> &[Frac] {
        &self.atom_positions
    }

    pub fn atom_count(&self) -> usize {
        self.atom_positions.len()
    }

    pub fn box_length_nm(&self) -> f64 {
        self.repeats as f64 * self.lattice_constant_nm
    }

    /// Nearest-neighbour (bond) distance, `a·√3/4`.
    pub fn bond_length_nm(&self) -> f64 {
        self.lattice_constant_nm * 3f64.sqrt() / 4.0
    }

    pub fn to_cartesian(&self, f: Frac) -> [f64; 3] {
        let l = self.box_length_nm();
        [f[0] * l, f[1] * l, f[2] * l]
    }

    pub fn to_fractional(&self, c: [f64; 3]) -> Frac {
        let l = self.box_length_nm();
        wrap([c[0] / l, c[1] / l, c[2] / l])
    }

    /// Unoccupied tetrahedral holes of the underlying FCC lattice, four per
    /// conventional cell (FCC + (¾,¾,¾)).
    pub fn tetrahedral_voids(&self) -> Vec<Frac> {
        conventional_cells(self.repeats)
            .flat_map(|cell| {
                FCC_BASIS
                    .iter()
                    .map(move |b| lattice_point(cell, *b, VOID_SHIFT, self.repeats))
            })
            .collect()
    }
}

fn conventional_cells(n: usize) -> impl Iterator<Item = [usize; 3]> {
    (0..n).flat_map(move |i| (0..n).flat_map(move |j| (0..n).map(move |k| [i, j, k])))
}

fn lattice_point(cell: [usize; 3], basis: Frac, shift: Frac, n: usize) -> Frac {
    let n = n as f64;
    wrap([
        (cell[0] as f64 + basis[0] + shift[0]) / n,
        (cell[1] as f64 + basis[1] + shift[1]) / n,
        (cell[2] as f64 + basis[2] + shift[2]) / n,
    ])
}

/// Wraps a fractional coordinate into `[0, 1)`.
pub fn wrap(f: Frac) -> Frac {
    f.map(|x| {
        let w = x - x.floor();
        // x.floor() can leave w == 1.0 for tiny negative x; -0.0 is normalised too
        if w >= 1.0 || w == 0.0 {
            0.0
        } else {
            w
        }
    })
}

/// `n×n×n` conventional diamond-cubic cells, `8·n³` atoms.
pub fn build_supercell(repeats: usize, lattice_constant_nm: f64) -> Result<SupercellGeometry> {
    if repeats == 0 {
        return Err(Error::invalid("supercell repeats must be >= 1"));
    }
    if !(lattice_constant_nm.is_finite() && lattice_constant_nm > 0.0) {
        return Err(Error::invalid("lattice constant must be positive"));
    }
    let atom_positions = conventional_cells(repeats)
        .flat_map(|cell| {
            [[0.0; 3], DIAMOND_SHIFT].into_iter().flat_map(move |shift| {
                FCC_BASIS
                    .iter()
                    .map(move |b| lattice_point(cell, *b, shift, repeats))
            })
        })
        .collect();
    Ok(SupercellGeometry {
        repeats,
        lattice_constant_nm,
        atom_positions,
    })
}

/// Minimum-image displacement `b − a` in Cartesian nm.
pub fn min_image_vector(geom: &SupercellGeometry, a: Frac, b: Frac) -> [f64; 3] {
    let l = geom.box_length_nm();
    let mut d = [0.0; 3];
    for i in 0..3 {
        let x = b[i] - a[i];
        d[i] = (x - x.round()) * l;
    }
    d
}

pub fn min_image_separation(geom: &SupercellGeometry, a: Frac, b: Frac) -> f64 {
    norm(min_image_vector(geom, a, b))
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Tuning of the G-center embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GCenterOptions {
    /// Displacement of the silicon interstitial from the void centre along the
    /// in-plane ⟨110⟩ axis of the complex, toward the carbon pair.
    pub si_relaxation_offset_nm: f64,
}

impl Default for GCenterOptions {
    fn default() -> Self {
        GCenterOptions {
            si_relaxation_offset_nm: 0.05,
        }
    }
}

/// Type-B G-center: two substitutional carbons on a bonded pair of lattice
/// sites and a silicon interstitial in one of the three voids closest to the
/// pair midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct GCenterPlacement {
    pub carbon_site_a: usize,
    pub carbon_site_b: usize,
    pub si_interstitial_position: Frac,
    /// Index (0..3) of the symmetry-equivalent void the interstitial occupies.
    pub orientation: usize,
    pub occupied_void: Frac,
}

impl GCenterPlacement {
    pub fn new(
        geom: &SupercellGeometry,
        carbon_site_a: usize,
        carbon_site_b: usize,
        orientation: usize,
        options: GCenterOptions,
    ) -> Result<Self> {
        let n_atoms = geom.atom_count();
        if carbon_site_a >= n_atoms || carbon_site_b >= n_atoms {
            return Err(Error::invalid(format!(
                "carbon site index outside geometry ({n_atoms} atoms)"
            )));
        }
        let pa = geom.atom_positions[carbon_site_a];
        let pb = geom.atom_positions[carbon_site_b];
        let bond = min_image_separation(geom, pa, pb);
        if (bond - geom.bond_length_nm()).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "carbon sites {carbon_site_a} and {carbon_site_b} are {bond:.4} nm apart, not nearest neighbours"
            )));
        }

        let mid = midpoint(geom, pa, pb);
        let mut voids: Vec<(f64, Frac)> = geom
            .tetrahedral_voids()
            .into_iter()
            .map(|v| (min_image_separation(geom, mid, v), v))
            .collect();
        voids.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| lex_cmp(&x.1, &y.1)));
        let nearest = voids[0].0;
        let mut candidates: Vec<Frac> = voids
            .iter()
            .take_while(|(d, _)| *d - nearest < 1e-9)
            .map(|(_, v)| *v)
            .collect();
        candidates.sort_by(lex_cmp);
        let Some(&void) = candidates.get(orientation) else {
            return Err(Error::invalid(format!(
                "orientation {orientation} out of range (0..{})",
                candidates.len()
            )));
        };

        let (near, far) = if min_image_separation(geom, void, pa)
            <= min_image_separation(geom, void, pb)
        {
            (pa, pb)
        } else {
            (pb, pa)
        };
        let to_void = min_image_vector(geom, near, void);
        let to_far = min_image_vector(geom, near, far);
        let axis = [
            to_void[0] + to_far[0],
            to_void[1] + to_far[1],
            to_void[2] + to_far[2],
        ];
        let len = norm(axis);
        let off = options.si_relaxation_offset_nm;
        let vc = geom.to_cartesian(void);
        let si = geom.to_fractional([
            vc[0] - off * axis[0] / len,
            vc[1] - off * axis[1] / len,
            vc[2] - off * axis[2] / len,
        ]);

        let placement = GCenterPlacement {
            carbon_site_a,
            carbon_site_b,
            si_interstitial_position: si,
            orientation,
            occupied_void: void,
        };
        placement.validate(geom)?;
        Ok(placement)
    }

    /// Default embedding near the centre of the supercell: the carbon pair is
    /// the first atom of conventional cell (n/2, n/2, n/2) and its bonded
    /// partner along [111].
    pub fn centered(geom: &SupercellGeometry) -> Result<Self> {
        let n = geom.repeats();
        let c = n / 2;
        let cell_index = (c * n + c) * n + c;
        let a = cell_index * 8;
        let b = a + 4;
        Self::new(geom, a, b, 0, GCenterOptions::default())
    }

    /// Midpoint of the two carbons, the reference point for separations.
    pub fn centroid(&self, geom: &SupercellGeometry) -> Frac {
        midpoint(
            geom,
            geom.atom_positions[self.carbon_site_a],
            geom.atom_positions[self.carbon_site_b],
        )
    }

    pub fn validate(&self, geom: &SupercellGeometry) -> Result<()> {
        let n_atoms = geom.atom_count();
        if self.carbon_site_a >= n_atoms || self.carbon_site_b >= n_atoms {
            return Err(Error::invalid("G-center carbon site outside geometry"));
        }
        if self.carbon_site_a == self.carbon_site_b {
            return Err(Error::invalid("G-center carbons must be distinct sites"));
        }
        let si = self.si_interstitial_position;
        if si.iter().any(|x| !x.is_finite() || *x < 0.0 || *x >= 1.0) {
            return Err(Error::invalid(
                "G-center interstitial position must be fractional in [0, 1)",
            ));
        }
        if geom
            .atom_positions
            .iter()
            .any(|p| min_image_separation(geom, *p, si) < 1e-6)
        {
            return Err(Error::invalid(
                "G-center interstitial coincides with a lattice site",
            ));
        }
        Ok(())
    }
}

fn midpoint(geom: &SupercellGeometry, a: Frac, b: Frac) -> Frac {
    let d = min_image_vector(geom, a, b);
    let l = geom.box_length_nm();
    wrap([
        a[0] + 0.5 * d[0] / l,
        a[1] + 0.5 * d[1] / l,
        a[2] + 0.5 * d[2] / l,
    ])
}

fn lex_cmp(a: &Frac, b: &Frac) -> Ordering {
    a[0].total_cmp(&b[0])
        .then_with(|| a[1].total_cmp(&b[1]))
        .then_with(|| a[2].total_cmp(&b[2]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SiteKind {
    Vacancy,
    InterstitialVoid,
}

impl SiteKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SiteKind::Vacancy => "vacancy",
            SiteKind::InterstitialVoid => "interstitial-void",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateSite {
    pub kind: SiteKind,
    pub position: Frac,
    pub separation_nm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationOptions {
    /// Voids closer than this to the G-center silicon interstitial are not
    /// offered as interstitial candidates.
    pub exclusion_radius_nm: f64,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            exclusion_radius_nm: 0.35,
        }
    }
}

/// Candidate defect sites, sorted by separation then position.
///
/// Separations are measured from the G-center centroid, or from the box
/// centre for a pristine cell.
pub fn enumerate_candidates(
    geom: &SupercellGeometry,
    gcb: Option<&GCenterPlacement>,
    kind: SiteKind,
    options: &EnumerationOptions,
) -> Result<Vec<CandidateSite>> {
    if let Some(g) = gcb {
        g.validate(geom)?;
    }
    let reference = gcb.map_or([0.5; 3], |g| g.centroid(geom));

    let positions: Vec<Frac> = match (kind, gcb) {
        (SiteKind::Vacancy, None) => geom.atom_positions.clone(),
        (SiteKind::Vacancy, Some(g)) => geom
            .atom_positions
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != g.carbon_site_a && *i != g.carbon_site_b)
            .map(|(_, p)| *p)
            .chain(std::iter::once(g.si_interstitial_position))
            .collect(),
        (SiteKind::InterstitialVoid, None) => geom.tetrahedral_voids(),
        (SiteKind::InterstitialVoid, Some(g)) => geom
            .tetrahedral_voids()
            .into_iter()
            .filter(|v| {
                min_image_separation(geom, *v, g.si_interstitial_position)
                    >= options.exclusion_radius_nm
            })
            .collect(),
    };

    let mut sites: Vec<CandidateSite> = positions
        .into_iter()
        .map(|p| CandidateSite {
            kind,
            position: p,
            separation_nm: min_image_separation(geom, reference, p),
        })
        .collect();
    sites.sort_by(|a, b| {
        a.separation_nm
            .total_cmp(&b.separation_nm)
            .then_with(|| lex_cmp(&a.position, &b.position))
    });
    Ok(sites)
}

/// XYZ dump (element, Cartesian nm) for external viewers.
pub fn write_xyz(geom: &SupercellGeometry, gcb: Option<&GCenterPlacement>) -> String {
    let mut atoms: Vec<(&str, [f64; 3])> = geom
        .atom_positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let carbon = gcb.is_some_and(|g| i == g.carbon_site_a || i == g.carbon_site_b);
            (if carbon { "C" } else { "Si" }, geom.to_cartesian(*p))
        })
        .collect();
    if let Some(g) = gcb {
        atoms.push(("Si", geom.to_cartesian(g.si_interstitial_position)));
    }
    let mut out = String::new();
    let _ = writeln!(out, "{}", atoms.len());
    let _ = writeln!(
        out,
        "diamond-cubic Si {n}x{n}x{n} a={a} nm box={l:.6} nm (coordinates in nm)",
        n = geom.repeats,
        a = geom.lattice_constant_nm,
        l = geom.box_length_nm()
    );
    for (el, c) in atoms {
        let _ = writeln!(out, "{el} {:.6} {:.6} {:.6}", c[0], c[1], c[2]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell3() -> SupercellGeometry {
        build_supercell(3, SILICON_LATTICE_CONSTANT_NM).unwrap()
    }

    #[test]
    fn atom_counts() {
        for (n, atoms) in [(1, 8), (2, 64), (3, 216)] {
            let g = build_supercell(n, SILICON_LATTICE_CONSTANT_NM).unwrap();
            assert_eq!(g.atom_count(), atoms);
            assert!(g
                .atom_positions()
                .iter()
                .all(|p| p.iter().all(|x| (0.0..1.0).contains(x))));
        }
        assert!((cell3().box_length_nm() - 1.6293).abs() < 1e-12);
        assert!(build_supercell(0, 0.5431).is_err());
    }

    #[test]
    fn min_image_examples() {
        let g = cell3();
        let half = min_image_separation(&g, [0.0; 3], [0.5, 0.0, 0.0]);
        assert!((half - 0.81465).abs() < 1e-4, "{half}");
        assert_eq!(min_image_separation(&g, [0.0; 3], [1.0, 0.0, 0.0]), 0.0);
        let diag = min_image_separation(&g, [0.0; 3], [0.5, 0.5, 0.5]);
        assert!((diag - 1.6293 * 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((diag - 1.411).abs() < 1e-3);
    }

    #[test]
    fn every_atom_has_four_bonds() {
        let g = build_supercell(2, SILICON_LATTICE_CONSTANT_NM).unwrap();
        let bond = g.bond_length_nm();
        for p in g.atom_positions() {
            let bonded = g
                .atom_positions()
                .iter()
                .filter(|q| (min_image_separation(&g, *p, **q) - bond).abs() < 1e-9)
                .count();
            assert_eq!(bonded, 4);
        }
    }

    #[test]
    fn gcenter_counts() {
        let g = cell3();
        let gcb = GCenterPlacement::centered(&g).unwrap();
        let opts = EnumerationOptions::default();
        let vac = enumerate_candidates(&g, Some(&gcb), SiteKind::Vacancy, &opts).unwrap();
        assert_eq!(vac.len(), 215);
        let voids =
            enumerate_candidates(&g, Some(&gcb), SiteKind::InterstitialVoid, &opts).unwrap();
        assert_eq!(voids.len(), 106);
        let pristine = enumerate_candidates(&g, None, SiteKind::Vacancy, &opts).unwrap();
        assert_eq!(pristine.len(), 216);
    }

    #[test]
    fn three_orientations_exist() {
        let g = cell3();
        let gcb = GCenterPlacement::centered(&g).unwrap();
        let (a, b) = (gcb.carbon_site_a, gcb.carbon_site_b);
        let voids: Vec<Frac> = (0..3)
            .map(|o| {
                GCenterPlacement::new(&g, a, b, o, GCenterOptions::default())
                    .unwrap()
                    .occupied_void
            })
            .collect();
        assert_ne!(voids[0], voids[1]);
        assert_ne!(voids[1], voids[2]);
        assert!(GCenterPlacement::new(&g, a, b, 3, GCenterOptions::default()).is_err());
    }

    #[test]
    fn rejects_bad_placements() {
        let g = cell3();
        assert!(GCenterPlacement::new(&g, 0, 9999, 0, GCenterOptions::default()).is_err());
        // atoms 0 and 1 are FCC neighbours (a/√2), not bonded
        assert!(GCenterPlacement::new(&g, 0, 1, 0, GCenterOptions::default()).is_err());
        let mut gcb = GCenterPlacement::centered(&g).unwrap();
        gcb.si_interstitial_position = g.atom_positions()[5];
        assert!(enumerate_candidates(
            &g,
            Some(&gcb),
            SiteKind::Vacancy,
            &EnumerationOptions::default()
        )
        .is_err());
    }

    #[test]
    fn candidates_sorted_and_bounded() {
        let g = cell3();
        let gcb = GCenterPlacement::centered(&g).unwrap();
        let max = g.box_length_nm() * 3f64.sqrt() / 2.0;
        for kind in [SiteKind::Vacancy, SiteKind::InterstitialVoid] {
            let sites =
                enumerate_candidates(&g, Some(&gcb), kind, &EnumerationOptions::default())
                    .unwrap();
            assert!(sites
                .windows(2)
                .all(|w| w[0].separation_nm <= w[1].separation_nm));
            assert!(sites
                .iter()
                .all(|s| s.separation_nm >= 0.0 && s.separation_nm <= max + 1e-12));
        }
    }

    #[test]
    fn xyz_dump_shape() {
        let g = cell3();
        let gcb = GCenterPlacement::centered(&g).unwrap();
        let xyz = write_xyz(&g, Some(&gcb));
        let lines: Vec<&str> = xyz.lines().collect();
        assert_eq!(lines[0], "217");
        assert_eq!(lines.len(), 219);
        assert_eq!(lines.iter().filter(|l| l.starts_with("C ")).count(), 2);
    }
}
