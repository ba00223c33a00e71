//! Piecewise-affine cracked membranes: convex polygonal cells carrying affine
//! deformations, polyhedral jump segments with two-sided traces, and the
//! structured-text scene format.

use crate::linalg::{cross_columns, v2, v3, Matrix32, Vec2, Vec3};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// One affine cell: an open convex polygon on which the deformation is
/// x |-> A x + c.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Cell {
    /// Counter-clockwise vertex list.
    pub polygon: Vec<Vec2>,
    pub gradient: Matrix32,
    pub offset: Vec3,
}

impl Cell {
    pub fn value(&self, x: Vec2) -> Vec3 {
        self.gradient.apply(x) + self.offset
    }

    /// Signed distance to the polygon boundary, positive inside.
    pub fn inner_distance(&self, x: Vec2) -> f64 {
        let n = self.polygon.len();
        let mut d = f64::INFINITY;
        for i in 0..n {
            let a = self.polygon[i];
            let b = self.polygon[(i + 1) % n];
            let edge = b - a;
            // inward normal of a CCW polygon
            let nrm = edge.perp().normalized();
            d = d.min(nrm.dot(x - a));
        }
        d
    }

    pub fn area(&self) -> f64 {
        let n = self.polygon.len();
        let mut s = 0.0;
        for i in 0..n {
            let a = self.polygon[i];
            let b = self.polygon[(i + 1) % n];
            s += a.x * b.y - b.x * a.y;
        }
        0.5 * s
    }
}

/// Affine function of arclength along a segment, s |-> a + s * b in R^3.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AffineTrace {
    pub a: Vec3,
    pub b: Vec3,
}

impl AffineTrace {
    pub fn eval(&self, s: f64) -> Vec3 {
        self.a + self.b * s
    }
}

/// A straight piece of the jump set with unit normal and one-sided traces.
///
/// The normal is planar (embedded with third component zero); the trace on
/// the side the normal points into is `trace_plus`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JumpSegment {
    pub endpoints: [Vec2; 2],
    pub normal: Vec2,
    pub trace_plus: AffineTrace,
    pub trace_minus: AffineTrace,
    /// Index of the connected component this segment belongs to; two
    /// segments sharing an endpoint and a component index form a corner.
    pub component: usize,
}

impl JumpSegment {
    pub fn length(&self) -> f64 {
        (self.endpoints[1] - self.endpoints[0]).norm()
    }

    pub fn direction(&self) -> Vec2 {
        (self.endpoints[1] - self.endpoints[0]).normalized()
    }

    pub fn point_at(&self, s: f64) -> Vec2 {
        self.endpoints[0] + self.direction() * s
    }

    /// Jump amplitude [u] = u+ - u- at arclength s.
    pub fn jump(&self, s: f64) -> Vec3 {
        self.trace_plus.eval(s) - self.trace_minus.eval(s)
    }
}

/// A planar triangulated membrane with per-cell affine maps and a polyhedral
/// jump set. Immutable after construction; all evaluations are pure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrackedMembrane {
    /// Axis-aligned domain rectangle [x0, y0, x1, y1].
    pub domain: [f64; 4],
    pub cells: Vec<Cell>,
    pub jumps: Vec<JumpSegment>,
}

impl CrackedMembrane {
    /// Geometric and structural validation.
    ///
    /// `eta` is the orientation-preserving rank floor: min over cells of
    /// |A^1 x A^2| >= eta (pass 0 to skip, e.g. unconstrained mode).
    pub fn validate(&self, eta: f64) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::InvalidScene("no cells".into()));
        }
        let area: f64 = self.cells.iter().map(|c| c.area()).sum();
        let dom_area = (self.domain[2] - self.domain[0]) * (self.domain[3] - self.domain[1]);
        if (area - dom_area).abs() > 1e-9 * dom_area {
            return Err(Error::InvalidScene(format!(
                "cells cover area {area}, domain has {dom_area}"
            )));
        }
        for (i, c) in self.cells.iter().enumerate() {
            if !c.gradient.is_finite() || !c.offset.is_finite() {
                return Err(Error::InvalidScene(format!("non-finite affine map in cell {i}")));
            }
            if eta > 0.0 && cross_columns(&c.gradient).norm() < eta {
                return Err(Error::RankDeficient(i));
            }
        }
        for (k, j) in self.jumps.iter().enumerate() {
            let dir = j.endpoints[1] - j.endpoints[0];
            if dir.norm() < 1e-12 {
                return Err(Error::InvalidScene(format!("jump segment {k} degenerate")));
            }
            if (j.normal.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidScene(format!(
                    "jump segment {k} normal not unit"
                )));
            }
            if j.normal.dot(dir).abs() > 1e-10 * dir.norm() {
                return Err(Error::InvalidScene(format!(
                    "jump segment {k} normal not orthogonal to direction"
                )));
            }
            // nonzero jump along the open segment (sampled)
            let len = j.length();
            for t in [0.1, 0.35, 0.5, 0.65, 0.9] {
                if j.jump(t * len).norm() < 1e-12 {
                    return Err(Error::InvalidScene(format!(
                        "jump segment {k} has vanishing amplitude at s = {}",
                        t * len
                    )));
                }
            }
        }
        // class constraint: each component is one segment or two segments
        // sharing exactly one endpoint
        let ncomp = self.jumps.iter().map(|j| j.component).max().map_or(0, |m| m + 1);
        for comp in 0..ncomp {
            let segs: Vec<&JumpSegment> =
                self.jumps.iter().filter(|j| j.component == comp).collect();
            match segs.len() {
                0 | 1 => {}
                2 => {
                    let shared = segs[0]
                        .endpoints
                        .iter()
                        .flat_map(|p| segs[1].endpoints.iter().map(move |q| (*p, *q)))
                        .filter(|(p, q)| (*p - *q).norm() < 1e-12)
                        .count();
                    if shared != 1 {
                        return Err(Error::InvalidScene(format!(
                            "component {comp}: two segments must share exactly one endpoint"
                        )));
                    }
                }
                n => {
                    return Err(Error::InvalidScene(format!(
                        "component {comp} has {n} segments; at most two supported"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Index of the cell whose interior contains x.
    pub fn cell_at(&self, x: Vec2) -> Result<usize> {
        let scale = (self.domain[2] - self.domain[0]).max(self.domain[3] - self.domain[1]);
        let tol = 1e-12 * scale;
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.cells.iter().enumerate() {
            let d = c.inner_distance(x);
            if d > best.map_or(f64::NEG_INFINITY, |(_, bd)| bd) {
                best = Some((i, d));
            }
        }
        match best {
            Some((i, d)) if d > tol => Ok(i),
            Some((_, d)) if d.abs() <= tol => Err(Error::BoundaryHit(x.x, x.y)),
            _ => Err(Error::OutsideDomain(x.x, x.y)),
        }
    }

    /// Piecewise gradient at an interior point.
    pub fn gradient_of(&self, x: Vec2) -> Result<Matrix32> {
        Ok(self.cells[self.cell_at(x)?].gradient)
    }

    /// Deformation value at an interior point.
    pub fn value(&self, x: Vec2) -> Result<Vec3> {
        Ok(self.cells[self.cell_at(x)?].value(x))
    }

    /// Like `gradient_of`, but re-samples with a deterministic jitter on a
    /// boundary hit. Cell boundaries are null sets, so this never changes an
    /// integral.
    pub fn gradient_jittered(&self, x: Vec2) -> Result<(Vec2, usize)> {
        let scale = (self.domain[2] - self.domain[0]).max(self.domain[3] - self.domain[1]);
        let mut p = x;
        for k in 0..8 {
            match self.cell_at(p) {
                Ok(i) => return Ok((p, i)),
                Err(Error::BoundaryHit(..)) => {
                    let h = 3e-11 * scale * (k + 1) as f64;
                    p = v2(x.x + h, x.y + h * 0.618_033_988_749);
                }
                Err(e) => return Err(e),
            }
        }
        Err(Error::BoundaryHit(x.x, x.y))
    }

    /// Total jump length.
    pub fn jump_length(&self) -> f64 {
        self.jumps.iter().map(|j| j.length()).sum()
    }

    /// Derive both traces of every jump segment from the adjacent cells.
    pub fn derive_traces(&mut self) -> Result<()> {
        let probes = 1e-7;
        let jumps = std::mem::take(&mut self.jumps);
        let mut out = Vec::with_capacity(jumps.len());
        for mut j in jumps {
            let dir = j.direction();
            let len = j.length();
            let mid = j.point_at(0.5 * len);
            let plus_pt = mid + j.normal * probes;
            let minus_pt = mid - j.normal * probes;
            let plus_cell = &self.cells[self.cell_at(plus_pt)?];
            let minus_cell = &self.cells[self.cell_at(minus_pt)?];
            let p0 = j.endpoints[0];
            j.trace_plus = AffineTrace {
                a: plus_cell.value(p0),
                b: plus_cell.gradient.apply(dir),
            };
            j.trace_minus = AffineTrace {
                a: minus_cell.value(p0),
                b: minus_cell.gradient.apply(dir),
            };
            out.push(j);
        }
        self.jumps = out;
        Ok(())
    }

    /// Rectangular single-cell membrane with gradient `a` and offset zero.
    pub fn single_cell(domain: [f64; 4], a: Matrix32) -> Self {
        let [x0, y0, x1, y1] = domain;
        CrackedMembrane {
            domain,
            cells: vec![Cell {
                polygon: vec![v2(x0, y0), v2(x1, y0), v2(x1, y1), v2(x0, y1)],
                gradient: a,
                offset: v3(0.0, 0.0, 0.0),
            }],
            jumps: vec![],
        }
    }

    /// The standard two-cell fixture: domain rectangle split by the vertical
    /// line x = xc, both cells carrying gradient `a`, the right cell offset
    /// by `z` (so [u] = z with normal e1).
    pub fn split_fixture(domain: [f64; 4], xc: f64, a: Matrix32, z: Vec3) -> Result<Self> {
        let [x0, y0, x1, y1] = domain;
        let mut m = CrackedMembrane {
            domain,
            cells: vec![
                Cell {
                    polygon: vec![v2(x0, y0), v2(xc, y0), v2(xc, y1), v2(x0, y1)],
                    gradient: a,
                    offset: v3(0.0, 0.0, 0.0),
                },
                Cell {
                    polygon: vec![v2(xc, y0), v2(x1, y0), v2(x1, y1), v2(xc, y1)],
                    gradient: a,
                    offset: z,
                },
            ],
            jumps: vec![JumpSegment {
                endpoints: [v2(xc, y0), v2(xc, y1)],
                normal: v2(1.0, 0.0),
                trace_plus: AffineTrace {
                    a: v3(0.0, 0.0, 0.0),
                    b: v3(0.0, 0.0, 0.0),
                },
                trace_minus: AffineTrace {
                    a: v3(0.0, 0.0, 0.0),
                    b: v3(0.0, 0.0, 0.0),
                },
                component: 0,
            }],
        };
        m.derive_traces()?;
        Ok(m)
    }
}

// ---------------------------------------------------------------------------
// scene files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    domain: DomainSection,
    #[serde(default, rename = "cell")]
    cells: Vec<CellSection>,
    #[serde(default, rename = "jump")]
    jumps: Vec<JumpSection>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSection {
    rect: [f64; 4],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellSection {
    polygon: Vec<[f64; 2]>,
    /// Affine map as 9 reals: the 3x2 gradient row-major, then the offset.
    affine: [f64; 9],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JumpSection {
    endpoints: [[f64; 2]; 2],
    #[serde(default)]
    component: Option<usize>,
    /// Optional explicit traces (a then b, 6 reals each); derived from the
    /// adjacent cells when absent.
    #[serde(default)]
    trace_plus: Option<[f64; 6]>,
    #[serde(default)]
    trace_minus: Option<[f64; 6]>,
}

/// Parse a scene document. Traces omitted in the file are derived from the
/// adjacent cell maps.
pub fn parse_scene(text: &str) -> Result<CrackedMembrane> {
    let scene: SceneFile =
        toml::from_str(text).map_err(|e| Error::Parse(format!("scene: {e}")))?;
    let cells = scene
        .cells
        .iter()
        .map(|c| Cell {
            polygon: c.polygon.iter().map(|p| v2(p[0], p[1])).collect(),
            gradient: Matrix32([
                [c.affine[0], c.affine[1]],
                [c.affine[2], c.affine[3]],
                [c.affine[4], c.affine[5]],
            ]),
            offset: v3(c.affine[6], c.affine[7], c.affine[8]),
        })
        .collect();
    let mut membrane = CrackedMembrane {
        domain: scene.domain.rect,
        cells,
        jumps: vec![],
    };
    let zero = AffineTrace {
        a: v3(0.0, 0.0, 0.0),
        b: v3(0.0, 0.0, 0.0),
    };
    let mut need_derive = false;
    for (k, j) in scene.jumps.iter().enumerate() {
        let p0 = v2(j.endpoints[0][0], j.endpoints[0][1]);
        let p1 = v2(j.endpoints[1][0], j.endpoints[1][1]);
        let dir = (p1 - p0).normalized();
        let tr = |c: &Option<[f64; 6]>| {
            c.map(|t| AffineTrace {
                a: v3(t[0], t[1], t[2]),
                b: v3(t[3], t[4], t[5]),
            })
        };
        let (tp, tm) = (tr(&j.trace_plus), tr(&j.trace_minus));
        if tp.is_none() || tm.is_none() {
            need_derive = true;
        }
        membrane.jumps.push(JumpSegment {
            endpoints: [p0, p1],
            normal: dir.perp(),
            trace_plus: tp.unwrap_or(zero),
            trace_minus: tm.unwrap_or(zero),
            component: j.component.unwrap_or(k),
        });
    }
    if need_derive {
        membrane.derive_traces()?;
    }
    Ok(membrane)
}

/// Serialize a membrane back to the scene format.
pub fn write_scene(m: &CrackedMembrane) -> String {
    let scene = SceneFile {
        domain: DomainSection { rect: m.domain },
        cells: m
            .cells
            .iter()
            .map(|c| CellSection {
                polygon: c.polygon.iter().map(|p| [p.x, p.y]).collect(),
                affine: [
                    c.gradient.0[0][0],
                    c.gradient.0[0][1],
                    c.gradient.0[1][0],
                    c.gradient.0[1][1],
                    c.gradient.0[2][0],
                    c.gradient.0[2][1],
                    c.offset.x,
                    c.offset.y,
                    c.offset.z,
                ],
            })
            .collect(),
        jumps: m
            .jumps
            .iter()
            .map(|j| JumpSection {
                endpoints: [
                    [j.endpoints[0].x, j.endpoints[0].y],
                    [j.endpoints[1].x, j.endpoints[1].y],
                ],
                component: Some(j.component),
                trace_plus: Some([
                    j.trace_plus.a.x,
                    j.trace_plus.a.y,
                    j.trace_plus.a.z,
                    j.trace_plus.b.x,
                    j.trace_plus.b.y,
                    j.trace_plus.b.z,
                ]),
                trace_minus: Some([
                    j.trace_minus.a.x,
                    j.trace_minus.a.y,
                    j.trace_minus.a.z,
                    j.trace_minus.b.x,
                    j.trace_minus.b.y,
                    j.trace_minus.b.z,
                ]),
            })
            .collect(),
    };
    toml::to_string(&scene).expect("scene serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix32;

    fn id32() -> Matrix32 {
        Matrix32([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    }

    #[test]
    fn single_cell_gradient_lookup() {
        let a = Matrix32([[1.0, 0.5], [0.0, 1.0], [0.25, 0.0]]);
        let m = CrackedMembrane::single_cell([0.0, 0.0, 1.0, 1.0], a);
        assert_eq!(m.gradient_of(v2(0.3, 0.7)).unwrap(), a);
    }

    #[test]
    fn two_cell_lookup_and_boundary_hit() {
        let m =
            CrackedMembrane::split_fixture([0.0, 0.0, 1.0, 1.0], 0.5, id32(), v3(0.0, 0.0, 1.0))
                .unwrap();
        assert_eq!(m.cell_at(v2(0.25, 0.5)).unwrap(), 0);
        assert_eq!(m.cell_at(v2(0.75, 0.5)).unwrap(), 1);
        assert!(matches!(
            m.cell_at(v2(0.5, 0.5)),
            Err(Error::BoundaryHit(..))
        ));
        // jitter fallback lands in some cell
        let (_, cell) = m.gradient_jittered(v2(0.5, 0.5)).unwrap();
        assert!(cell < 2);
    }

    #[test]
    fn derived_traces_give_constant_jump() {
        let z = v3(0.6, 0.0, 0.8);
        let m =
            CrackedMembrane::split_fixture([0.0, 0.0, 1.0, 1.0], 0.5, id32(), z).unwrap();
        let j = &m.jumps[0];
        for s in [0.0, 0.3, 1.0] {
            assert!((j.jump(s) - z).norm() < 1e-12);
        }
        m.validate(0.5).unwrap();
    }

    #[test]
    fn scene_roundtrip() {
        let m =
            CrackedMembrane::split_fixture([0.0, 0.0, 1.0, 1.0], 0.5, id32(), v3(0.0, 0.0, 1.0))
                .unwrap();
        let text = write_scene(&m);
        let back = parse_scene(&text).unwrap();
        assert_eq!(back.cells.len(), 2);
        assert!((back.jumps[0].jump(0.5) - v3(0.0, 0.0, 1.0)).norm() < 1e-12);
        back.validate(0.5).unwrap();
    }

    #[test]
    fn scene_rejects_unknown_keys() {
        let bad = "[domain]\nrect = [0,0,1,1]\nbogus = 3\n";
        assert!(parse_scene(bad).is_err());
    }
}
