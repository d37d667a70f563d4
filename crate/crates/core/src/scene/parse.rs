//! Line-oriented scene format.
//!
//! ```text
//! # comment
//! material NAME diffuse R G B [emit R G B]
//! material NAME phong R G B EXPONENT [emit R G B]
//! material NAME mirror R G B
//! material NAME glass R G B IOR
//! sphere CX CY CZ RADIUS MATERIAL
//! box X0 Y0 Z0 X1 Y1 Z1 MATERIAL
//! tri AX AY AZ BX BY BZ CX CY CZ MATERIAL
//! arealight OX OY OZ UX UY UZ VX VY VZ MATERIAL
//! dirlight DX DY DZ R G B
//! camera PX PY PZ LX LY LZ UPX UPY UPZ FOV
//! ```
//!
//! An `arealight` is the parallelogram `O + s*U + t*V` emitting the
//! material's `emit` radiance along `U x V`; `dirlight` gives the travel
//! direction and irradiance. Materials must be declared before use.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use super::light::{Camera, Light};
use super::material::{Material, MaterialKind};
use super::shape::Shape;
use super::{Object, Scene};
use crate::math::{vec3, Vec3};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownDirective(String),
    UnknownMaterial(String),
    DuplicateMaterial(String),
    Arity {
        directive: String,
        expected: String,
        found: usize,
    },
    Number(String),
    Invalid(String),
    NotEmissive(String),
    EmissiveShape(String),
    DuplicateCamera,
    NoLights,
    NoCamera,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnknownDirective(d) => write!(f, "unknown directive '{d}'"),
            Self::UnknownMaterial(m) => write!(f, "unknown material '{m}'"),
            Self::DuplicateMaterial(m) => write!(f, "material '{m}' defined twice"),
            Self::Arity {
                directive,
                expected,
                found,
            } => write!(
                f,
                "'{directive}' expects {expected} arguments, found {found}"
            ),
            Self::Number(t) => write!(f, "expected a number, found '{t}'"),
            Self::Invalid(msg) => f.write_str(msg),
            Self::NotEmissive(m) => write!(f, "area light material '{m}' has no emission"),
            Self::EmissiveShape(m) => write!(
                f,
                "emissive material '{m}' can only be used by an arealight"
            ),
            Self::DuplicateCamera => f.write_str("camera defined twice"),
            Self::NoLights => f.write_str("scene has no lights"),
            Self::NoCamera => f.write_str("scene has no camera"),
        }
    }
}

/// Parse failure with a 1-based position (0 for whole-file problems).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.kind)
        } else {
            write!(
                f,
                "{} at line {}, column {}",
                self.kind, self.line, self.column
            )
        }
    }
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

struct Line<'a> {
    number: usize,
    directive: Token<'a>,
    args: Vec<Token<'a>>,
}

impl<'a> Line<'a> {
    fn err(&self, column: usize, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.number,
            column,
            kind,
        }
    }

    fn arity(&self, allowed: &[usize]) -> Result<(), ParseError> {
        if allowed.contains(&self.args.len()) {
            return Ok(());
        }
        let expected = allowed
            .iter()
            .map(|n| n.to_string())
            .collect::<Vec<_>>()
            .join(" or ");
        Err(self.err(
            self.directive.column,
            ParseErrorKind::Arity {
                directive: self.directive.text.into(),
                expected,
                found: self.args.len(),
            },
        ))
    }

    fn num(&self, i: usize) -> Result<f64, ParseError> {
        let t = &self.args[i];
        match t.text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(t.column, ParseErrorKind::Number(t.text.into()))),
        }
    }

    fn vec(&self, i: usize) -> Result<Vec3, ParseError> {
        Ok(vec3(self.num(i)?, self.num(i + 1)?, self.num(i + 2)?))
    }

    fn invalid(&self, i: usize, msg: impl Into<String>) -> ParseError {
        let col = self.args.get(i).map_or(self.directive.column, |t| t.column);
        self.err(col, ParseErrorKind::Invalid(msg.into()))
    }
}

fn tokenize(number: usize, raw: &str) -> Option<Line<'_>> {
    let content = raw.split('#').next().unwrap_or("");
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, ch) in content.char_indices().chain(std::iter::once((content.len(), ' '))) {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                tokens.push(Token {
                    text: &content[s..i],
                    column: content[..s].chars().count() + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    let mut it = tokens.into_iter();
    let directive = it.next()?;
    Some(Line {
        number,
        directive,
        args: it.collect(),
    })
}

pub fn parse_scene(text: &str) -> Result<Scene, ParseError> {
    let mut materials: Vec<Material> = Vec::new();
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut objects = Vec::new();
    let mut lights = Vec::new();
    let mut camera = None;

    let lookup = |line: &Line, i: usize, names: &HashMap<String, usize>| {
        let t = &line.args[i];
        names
            .get(t.text)
            .copied()
            .ok_or_else(|| line.err(t.column, ParseErrorKind::UnknownMaterial(t.text.into())))
    };

    for (i, raw) in text.lines().enumerate() {
        let Some(line) = tokenize(i + 1, raw) else {
            continue;
        };
        let mut shape_with = |shape: Shape, mat_arg: usize, materials: &[Material]| {
            let m = lookup(&line, mat_arg, &names)?;
            if materials[m].is_emissive() {
                return Err(line.err(
                    line.args[mat_arg].column,
                    ParseErrorKind::EmissiveShape(materials[m].name.clone()),
                ));
            }
            objects.push(Object {
                shape,
                material: m,
                light: None,
            });
            Ok(())
        };
        match line.directive.text {
            "material" => {
                if line.args.len() < 2 {
                    line.arity(&[5, 6, 9, 10])?;
                }
                let name = line.args[0].text.to_string();
                let kind_tok = &line.args[1];
                let (kind, base) = match kind_tok.text {
                    "diffuse" => {
                        line.arity(&[5, 9])?;
                        (MaterialKind::Diffuse, 5)
                    }
                    "phong" => {
                        line.arity(&[6, 10])?;
                        (
                            MaterialKind::Phong {
                                exponent: line.num(5)?,
                            },
                            6,
                        )
                    }
                    "mirror" => {
                        line.arity(&[5])?;
                        (MaterialKind::Mirror, 5)
                    }
                    "glass" => {
                        line.arity(&[6])?;
                        (MaterialKind::Glass { ior: line.num(5)? }, 6)
                    }
                    other => {
                        return Err(line.err(
                            kind_tok.column,
                            ParseErrorKind::Invalid(format!("unknown material kind '{other}'")),
                        ))
                    }
                };
                let emission = if line.args.len() > base {
                    if line.args[base].text != "emit" {
                        return Err(line.invalid(base, "expected 'emit R G B'"));
                    }
                    line.vec(base + 1)?
                } else {
                    Vec3::ZERO
                };
                let m = Material {
                    name: name.clone(),
                    kind,
                    albedo: line.vec(2)?,
                    emission,
                };
                m.validate().map_err(|msg| line.invalid(2, msg))?;
                if names.contains_key(&name) {
                    return Err(line.err(
                        line.args[0].column,
                        ParseErrorKind::DuplicateMaterial(name),
                    ));
                }
                names.insert(name, materials.len());
                materials.push(m);
            }
            "sphere" => {
                line.arity(&[5])?;
                let radius = line.num(3)?;
                if radius <= 0.0 {
                    return Err(line.invalid(3, "sphere radius must be positive"));
                }
                shape_with(
                    Shape::Sphere {
                        center: line.vec(0)?,
                        radius,
                    },
                    4,
                    &materials,
                )?;
            }
            "box" => {
                line.arity(&[7])?;
                let (a, b) = (line.vec(0)?, line.vec(3)?);
                if !(a.x < b.x && a.y < b.y && a.z < b.z) {
                    return Err(line.invalid(0, "box corners must satisfy min < max"));
                }
                shape_with(Shape::Cuboid { min: a, max: b }, 6, &materials)?;
            }
            "tri" => {
                line.arity(&[10])?;
                let (a, b, c) = (line.vec(0)?, line.vec(3)?, line.vec(6)?);
                if (b - a).cross(c - a).length_squared() == 0.0 {
                    return Err(line.invalid(0, "degenerate triangle"));
                }
                shape_with(Shape::Triangle { a, b, c }, 9, &materials)?;
            }
            "arealight" => {
                line.arity(&[10])?;
                let (o, u, v) = (line.vec(0)?, line.vec(3)?, line.vec(6)?);
                if u.cross(v).length_squared() == 0.0 {
                    return Err(line.invalid(3, "degenerate area light"));
                }
                let m = lookup(&line, 9, &names)?;
                if !materials[m].is_emissive() {
                    return Err(line.err(
                        line.args[9].column,
                        ParseErrorKind::NotEmissive(materials[m].name.clone()),
                    ));
                }
                objects.push(Object {
                    shape: Shape::Quad { origin: o, u, v },
                    material: m,
                    light: Some(lights.len()),
                });
                lights.push(Light::area_light(o, u, v, materials[m].emission));
            }
            "dirlight" => {
                line.arity(&[6])?;
                let d = line.vec(0)?;
                if d.length_squared() == 0.0 {
                    return Err(line.invalid(0, "zero light direction"));
                }
                let e = line.vec(3)?;
                if e.x < 0.0 || e.y < 0.0 || e.z < 0.0 {
                    return Err(line.invalid(3, "irradiance must be >= 0"));
                }
                lights.push(Light::Directional {
                    direction: d.normalize(),
                    irradiance: e,
                });
            }
            "camera" => {
                line.arity(&[10])?;
                if camera.is_some() {
                    return Err(line.err(line.directive.column, ParseErrorKind::DuplicateCamera));
                }
                let c = Camera {
                    position: line.vec(0)?,
                    look_at: line.vec(3)?,
                    up: line.vec(6)?,
                    fov: line.num(9)?,
                };
                if !(c.fov > 0.0 && c.fov < 180.0) {
                    return Err(line.invalid(9, "field of view must lie in (0, 180)"));
                }
                let fwd = c.look_at - c.position;
                if fwd.length_squared() == 0.0 || fwd.cross(c.up).length_squared() == 0.0 {
                    return Err(line.invalid(3, "camera look-at and up must span a plane"));
                }
                camera = Some(c);
            }
            other => {
                return Err(line.err(
                    line.directive.column,
                    ParseErrorKind::UnknownDirective(other.into()),
                ))
            }
        }
    }
    let whole = |kind| ParseError {
        line: 0,
        column: 0,
        kind,
    };
    if lights.is_empty() {
        return Err(whole(ParseErrorKind::NoLights));
    }
    let camera = camera.ok_or_else(|| whole(ParseErrorKind::NoCamera))?;
    Ok(Scene::new(materials, objects, lights, camera))
}

fn v(s: &mut String, x: Vec3) {
    let _ = write!(s, " {} {} {}", x.x, x.y, x.z);
}

pub(super) fn serialize(scene: &Scene) -> String {
    let mut s = String::new();
    for m in &scene.materials {
        let _ = write!(s, "material {} ", m.name);
        let extra = match m.kind {
            MaterialKind::Diffuse => {
                s.push_str("diffuse");
                None
            }
            MaterialKind::Phong { exponent } => {
                s.push_str("phong");
                Some(exponent)
            }
            MaterialKind::Mirror => {
                s.push_str("mirror");
                None
            }
            MaterialKind::Glass { ior } => {
                s.push_str("glass");
                Some(ior)
            }
        };
        v(&mut s, m.albedo);
        if let Some(x) = extra {
            let _ = write!(s, " {x}");
        }
        if m.is_emissive() {
            s.push_str(" emit");
            v(&mut s, m.emission);
        }
        s.push('\n');
    }
    let name = |i: usize| &scene.materials[i].name;
    // Directional lights are written just before the first area light
    // declared after them, so light indices survive a round trip.
    let directional_before = |s: &mut String, next: &mut usize, upto: usize| {
        while *next < upto {
            if let Light::Directional {
                direction,
                irradiance,
            } = scene.lights[*next]
            {
                s.push_str("dirlight");
                v(s, direction);
                v(s, irradiance);
                s.push('\n');
            }
            *next += 1;
        }
    };
    let mut next = 0;
    for o in &scene.objects {
        if let Some(l) = o.light {
            directional_before(&mut s, &mut next, l);
            next = l + 1;
        }
        match o.shape {
            Shape::Sphere { center, radius } => {
                s.push_str("sphere");
                v(&mut s, center);
                let _ = write!(s, " {radius}");
            }
            Shape::Cuboid { min, max } => {
                s.push_str("box");
                v(&mut s, min);
                v(&mut s, max);
            }
            Shape::Triangle { a, b, c } => {
                s.push_str("tri");
                v(&mut s, a);
                v(&mut s, b);
                v(&mut s, c);
            }
            Shape::Quad { origin, u, v: w } => {
                s.push_str("arealight");
                v(&mut s, origin);
                v(&mut s, u);
                v(&mut s, w);
            }
        }
        let _ = writeln!(s, " {}", name(o.material));
    }
    directional_before(&mut s, &mut next, scene.lights.len());
    let c = &scene.camera;
    s.push_str("camera");
    v(&mut s, c.position);
    v(&mut s, c.look_at);
    v(&mut s, c.up);
    let _ = writeln!(s, " {}", c.fov);
    s
}
