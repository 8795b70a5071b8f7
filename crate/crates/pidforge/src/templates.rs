//! Built-in schematic symbol library. Each template draws inside a unit box
//! and carries the nominal pixel size its node box is resized to during
//! substitution. At least two variants exist per physical class.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::model::NodeClass;

#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    /// Stroked open or closed polyline, unit coordinates.
    Polyline(Vec<(f64, f64)>),
    /// Stroked ellipse outline.
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
    /// Filled polygon (scanline even-odd).
    FilledPolygon(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTemplate {
    pub id: &'static str,
    pub cls: NodeClass,
    /// nominal (width, height) in px
    pub size: (f64, f64),
    pub primitives: Vec<Primitive>,
}

pub struct TemplateLibrary {
    by_class: BTreeMap<NodeClass, Vec<SymbolTemplate>>,
}

impl TemplateLibrary {
    pub fn builtin() -> &'static TemplateLibrary {
        static LIB: OnceLock<TemplateLibrary> = OnceLock::new();
        LIB.get_or_init(|| {
            let mut by_class: BTreeMap<NodeClass, Vec<SymbolTemplate>> = BTreeMap::new();
            for t in builtin_templates() {
                by_class.entry(t.cls).or_default().push(t);
            }
            TemplateLibrary { by_class }
        })
    }

    pub fn for_class(&self, cls: NodeClass) -> &[SymbolTemplate] {
        self.by_class.get(&cls).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn get(&self, id: &str) -> Option<&SymbolTemplate> {
        self.by_class.values().flatten().find(|t| t.id == id)
    }

    pub fn all(&self) -> impl Iterator<Item = &SymbolTemplate> {
        self.by_class.values().flatten()
    }
}

fn closed(points: &[(f64, f64)]) -> Primitive {
    let mut v = points.to_vec();
    v.push(points[0]);
    Primitive::Polyline(v)
}

fn builtin_templates() -> Vec<SymbolTemplate> {
    use NodeClass::*;
    vec![
        SymbolTemplate {
            id: "valve/gate",
            cls: Valve,
            size: (36.0, 24.0),
            primitives: vec![closed(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)])],
        },
        SymbolTemplate {
            id: "valve/globe",
            cls: Valve,
            size: (36.0, 24.0),
            primitives: vec![
                closed(&[(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)]),
                Primitive::Ellipse { cx: 0.5, cy: 0.5, rx: 0.16, ry: 0.24 },
            ],
        },
        SymbolTemplate {
            id: "pump/impeller",
            cls: Pump,
            size: (44.0, 44.0),
            primitives: vec![
                Primitive::Ellipse { cx: 0.5, cy: 0.5, rx: 0.48, ry: 0.48 },
                Primitive::Polyline(vec![(0.16, 0.86), (0.84, 0.86)]),
            ],
        },
        SymbolTemplate {
            id: "pump/ring",
            cls: Pump,
            size: (44.0, 44.0),
            primitives: vec![
                Primitive::Ellipse { cx: 0.5, cy: 0.5, rx: 0.48, ry: 0.48 },
                Primitive::Ellipse { cx: 0.5, cy: 0.5, rx: 0.22, ry: 0.22 },
            ],
        },
        SymbolTemplate {
            id: "instrumentation/dial",
            cls: Instrumentation,
            size: (40.0, 40.0),
            primitives: vec![
                Primitive::Ellipse { cx: 0.5, cy: 0.5, rx: 0.48, ry: 0.48 },
                Primitive::Polyline(vec![(0.02, 0.5), (0.98, 0.5)]),
            ],
        },
        SymbolTemplate {
            id: "instrumentation/boxed-dial",
            cls: Instrumentation,
            size: (40.0, 40.0),
            primitives: vec![
                closed(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]),
                Primitive::Ellipse { cx: 0.5, cy: 0.5, rx: 0.42, ry: 0.42 },
            ],
        },
        SymbolTemplate {
            id: "general/block",
            cls: General,
            size: (56.0, 40.0),
            primitives: vec![closed(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])],
        },
        SymbolTemplate {
            id: "general/block-notch",
            cls: General,
            size: (56.0, 40.0),
            primitives: vec![
                closed(&[(0.0, 0.0), (0.82, 0.0), (1.0, 0.3), (1.0, 1.0), (0.0, 1.0)]),
            ],
        },
        SymbolTemplate {
            id: "tank/vertical",
            cls: Tank,
            size: (56.0, 92.0),
            primitives: vec![
                Primitive::Polyline(vec![(0.0, 0.14), (0.0, 0.86)]),
                Primitive::Polyline(vec![(1.0, 0.14), (1.0, 0.86)]),
                Primitive::Ellipse { cx: 0.5, cy: 0.14, rx: 0.5, ry: 0.14 },
                Primitive::Ellipse { cx: 0.5, cy: 0.86, rx: 0.5, ry: 0.14 },
            ],
        },
        SymbolTemplate {
            id: "tank/horizontal",
            cls: Tank,
            size: (92.0, 56.0),
            primitives: vec![
                Primitive::Polyline(vec![(0.14, 0.0), (0.86, 0.0)]),
                Primitive::Polyline(vec![(0.14, 1.0), (0.86, 1.0)]),
                Primitive::Ellipse { cx: 0.14, cy: 0.5, rx: 0.14, ry: 0.5 },
                Primitive::Ellipse { cx: 0.86, cy: 0.5, rx: 0.14, ry: 0.5 },
            ],
        },
        SymbolTemplate {
            id: "arrow/solid",
            cls: Arrow,
            size: (18.0, 14.0),
            primitives: vec![Primitive::FilledPolygon(vec![
                (0.0, 0.0),
                (1.0, 0.5),
                (0.0, 1.0),
            ])],
        },
        SymbolTemplate {
            id: "arrow/open",
            cls: Arrow,
            size: (18.0, 14.0),
            primitives: vec![closed(&[(0.0, 0.0), (1.0, 0.5), (0.0, 1.0)])],
        },
        SymbolTemplate {
            id: "inlet_outlet/plate",
            cls: InletOutlet,
            size: (52.0, 30.0),
            primitives: vec![closed(&[
                (0.0, 0.0),
                (0.72, 0.0),
                (1.0, 0.5),
                (0.72, 1.0),
                (0.0, 1.0),
            ])],
        },
        SymbolTemplate {
            id: "inlet_outlet/flag",
            cls: InletOutlet,
            size: (52.0, 30.0),
            primitives: vec![closed(&[
                (0.0, 0.0),
                (1.0, 0.0),
                (0.68, 0.5),
                (1.0, 1.0),
                (0.0, 1.0),
            ])],
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PHYSICAL_CLASSES;

    #[test]
    fn two_templates_per_physical_class() {
        let lib = TemplateLibrary::builtin();
        for cls in PHYSICAL_CLASSES {
            assert!(
                lib.for_class(cls).len() >= 2,
                "class {cls} has {} templates",
                lib.for_class(cls).len()
            );
        }
    }

    #[test]
    fn primitives_fit_unit_box() {
        for t in TemplateLibrary::builtin().all() {
            for p in &t.primitives {
                let pts: Vec<(f64, f64)> = match p {
                    Primitive::Polyline(v) | Primitive::FilledPolygon(v) => v.clone(),
                    Primitive::Ellipse { cx, cy, rx, ry } => vec![
                        (cx - rx, cy - ry),
                        (cx + rx, cy + ry),
                    ],
                };
                for (x, y) in pts {
                    assert!(
                        (-1e-9..=1.0 + 1e-9).contains(&x) && (-1e-9..=1.0 + 1e-9).contains(&y),
                        "{}: point ({x},{y}) outside unit box",
                        t.id
                    );
                }
            }
        }
    }

    #[test]
    fn ids_unique_and_resolvable() {
        let lib = TemplateLibrary::builtin();
        let ids: Vec<&str> = lib.all().map(|t| t.id).collect();
        let mut dedup = ids.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), ids.len());
        for id in ids {
            assert!(lib.get(id).is_some());
        }
    }
}
