//! The document network: every node the subnetworks sample, with its prior
//! family, categorical arity and parents.

use std::sync::OnceLock;

use crate::probnet::{Concentration, DistributionSpec, Family, NodeRef, Registry};

/// Number of categories of a Dirichlet-categorical node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Fixed(usize),
    /// Size of the template's vocabulary file.
    Vocabulary,
    /// Number of font families in the template's font list.
    Fonts,
    BackgroundPalette,
    TextPalette,
    AccentPalette,
    FillPalette,
    WatermarkTexts,
    /// Dimension chosen at sampling time (cell widths, column widths).
    Dynamic,
}

#[derive(Clone, Debug)]
pub struct NodeDecl {
    pub id: String,
    pub family: Family,
    pub arity: Option<Arity>,
    pub parents: Vec<String>,
}

/// Node of the template choice; its hyperparameters live in the mixture.
pub const TEMPLATE_NODE: &str = "doc.template";

/// Body element categories, in the order of the `doc.elements` Dirichlet.
pub const BODY_KINDS: [&str; 6] = ["section", "table", "figure", "paragraph", "bullet", "equation"];

struct Catalog {
    decls: Vec<NodeDecl>,
}

impl Catalog {
    fn add(&mut self, id: &str, family: Family, arity: Option<Arity>, parents: &[&str]) {
        self.decls.push(NodeDecl {
            id: id.to_string(),
            family,
            arity,
            parents: parents.iter().map(|p| p.to_string()).collect(),
        });
    }

    fn dir(&mut self, id: &str, arity: Arity, parents: &[&str]) {
        self.add(id, Family::DirichletCategorical, Some(arity), parents);
    }

    fn beta(&mut self, id: &str, parents: &[&str]) {
        self.add(id, Family::BetaBernoulli, None, parents);
    }

    fn normal(&mut self, id: &str, parents: &[&str]) {
        self.add(id, Family::NormalInvGamma, None, parents);
    }

    fn uniform(&mut self, id: &str, parents: &[&str]) {
        self.add(id, Family::UniformContinuous, None, parents);
    }

    fn count(&mut self, id: &str, parents: &[&str]) {
        self.add(id, Family::UniformDiscrete, None, parents);
    }

    fn shifted_exp(&mut self, id: &str, parents: &[&str]) {
        self.add(id, Family::ShiftedExponential, None, parents);
    }
}

const T: &[&str] = &[TEMPLATE_NODE];

fn build_catalog() -> Vec<NodeDecl> {
    let mut c = Catalog { decls: Vec::new() };
    c.dir(TEMPLATE_NODE, Arity::Dynamic, &[]);

    c.normal("doc.margin", T);
    c.dir("doc.columns", Arity::Fixed(3), T);
    c.dir("doc.column_widths", Arity::Dynamic, &["doc.columns"]);
    c.dir("doc.background", Arity::BackgroundPalette, T);
    c.dir("doc.font", Arity::Fonts, T);
    c.shifted_exp("doc.font_size", T);
    c.dir("doc.text_color", Arity::TextPalette, T);
    c.beta("doc.header", T);
    c.beta("doc.footer", T);
    c.beta("doc.title", T);
    c.dir("doc.elements", Arity::Fixed(BODY_KINDS.len()), T);
    c.add("doc.element_count", Family::Poisson, None, T);
    c.dir("doc.vocabulary", Arity::Vocabulary, T);

    for p in ["section", "title"] {
        let id = |s: &str| format!("{p}.{s}");
        c.dir(&id("font_style"), Arity::Fixed(4), T);
        c.dir(&id("align"), Arity::Fixed(3), T);
        c.dir(&id("fore_color"), Arity::TextPalette, T);
        c.dir(&id("back_color"), Arity::FillPalette, T);
        c.dir(&id("border_type"), Arity::Fixed(4), T);
        c.dir(&id("border_color"), Arity::AccentPalette, &[&id("border_type")]);
        c.uniform(&id("font_scale"), &["doc.font_size"]);
        c.uniform(&id("pre_space"), &["doc.font_size"]);
        c.uniform(&id("post_space"), &["doc.font_size"]);
        c.dir(&id("lines"), Arity::Fixed(8), T);
        c.normal(&id("words"), &[&id("lines"), "doc.vocabulary"]);
    }

    c.count("paragraph.lines", T);
    c.uniform("paragraph.line_spacing", &["doc.font_size"]);
    c.uniform("paragraph.block_spacing", &["doc.font_size"]);

    c.count("bullet.items", T);
    c.count("bullet.lines", &["bullet.items"]);
    c.uniform("bullet.line_spacing", &["doc.font_size"]);
    c.uniform("bullet.block_spacing", &["doc.font_size"]);
    c.dir("bullet.type", Arity::Fixed(4), T);
    c.uniform("bullet.offset", &["doc.font_size"]);

    c.count("equation.groups", T);
    c.beta("equation.script", &["equation.groups"]);
    c.uniform("equation.spacing", &["doc.font_size"]);

    c.normal("table.width", T);
    c.dir("table.align", Arity::Fixed(3), T);
    c.dir("table.borders", Arity::Fixed(6), T);
    c.shifted_exp("table.h_pad", &["doc.font_size"]);
    c.shifted_exp("table.v_pad", &["doc.font_size"]);
    c.uniform("table.pre_space", &["doc.font_size"]);
    c.uniform("table.post_space", &["doc.font_size"]);
    c.add("table.rows", Family::TruncatedCauchy, None, T);
    c.dir("table.cols", Arity::Fixed(6), T);
    c.dir("table.cell_widths", Arity::Dynamic, &["table.cols", "table.width"]);
    c.dir("table.cell_lines", Arity::Fixed(3), &["table.cell_widths"]);
    c.normal("table.cell_words", &["table.cell_lines", "doc.vocabulary"]);
    c.dir("table.font_style", Arity::Fixed(4), T);
    c.dir("table.header_style", Arity::Fixed(4), T);
    c.beta("table.header_row", T);
    c.dir("table.cell_align", Arity::Fixed(3), T);
    c.dir("table.header_fill", Arity::FillPalette, &["table.header_row"]);
    c.beta("table.stripe", T);
    c.beta("table.qa", T);
    c.uniform("table.font_scale", &["doc.font_size"]);
    c.beta("table.caption", T);

    c.beta("figure.source", T);
    c.dir("figure.subplots", Arity::Fixed(4), &["figure.source"]);
    c.dir("figure.chart_type", Arity::Fixed(5), &["figure.subplots"]);
    c.count("figure.points", &["figure.chart_type"]);
    c.count("figure.series", &["figure.chart_type"]);
    c.uniform("figure.width", T);
    c.uniform("figure.height", &["figure.width"]);
    c.uniform("figure.pre_space", &["doc.font_size"]);
    c.uniform("figure.post_space", &["doc.font_size"]);
    c.beta("figure.caption", T);

    c.beta("caption.position", T);
    c.count("caption.lines", T);
    c.normal("caption.words", &["caption.lines", "doc.vocabulary"]);
    c.dir("caption.font_style", Arity::Fixed(4), T);
    c.uniform("caption.font_scale", &["doc.font_size"]);

    for p in ["header", "footer"] {
        let id = |s: &str| format!("{p}.{s}");
        c.dir(&id("columns"), Arity::Fixed(3), T);
        for slot in 0..3 {
            c.dir(&id(&format!("content.{slot}")), Arity::Fixed(4), &[&id("columns")]);
            c.dir(&id(&format!("align.{slot}")), Arity::Fixed(3), &[&id("columns")]);
        }
        c.dir(&id("font_style"), Arity::Fixed(4), T);
        c.dir(&id("color"), Arity::TextPalette, T);
        c.uniform(&id("font_scale"), &["doc.font_size"]);
        c.beta(&id("rule"), T);
        c.count(&id("logo_words"), T);
        c.count(&id("title_words"), T);
    }

    c.beta("defects.bleed.present", T);
    c.uniform("defects.bleed.opacity", &["defects.bleed.present"]);
    c.beta("defects.shadow.present", T);
    c.dir("defects.shadow.side", Arity::Fixed(4), &["defects.shadow.present"]);
    c.uniform("defects.shadow.width", &["defects.shadow.present"]);
    c.uniform("defects.shadow.strength", &["defects.shadow.present"]);
    c.beta("defects.corner.present", T);
    c.dir("defects.corner.which", Arity::Fixed(4), &["defects.corner.present"]);
    c.uniform("defects.corner.radius", &["defects.corner.present"]);
    c.uniform("defects.corner.darkness", &["defects.corner.present"]);
    c.beta("defects.watermark.present", T);
    c.dir("defects.watermark.text", Arity::WatermarkTexts, &["defects.watermark.present"]);
    c.uniform("defects.watermark.angle", &["defects.watermark.present"]);
    c.uniform("defects.watermark.x", &["defects.watermark.present"]);
    c.uniform("defects.watermark.y", &["defects.watermark.present"]);
    c.uniform("defects.watermark.opacity", &["defects.watermark.present"]);
    c.uniform("defects.watermark.size", &["defects.watermark.present"]);
    c.dir("defects.watermark.color", Arity::TextPalette, &["defects.watermark.present"]);
    c.beta("defects.occlusion.present", T);
    c.uniform("defects.occlusion.area", &["defects.occlusion.present"]);
    c.uniform("defects.occlusion.x", &["defects.occlusion.present"]);
    c.uniform("defects.occlusion.y", &["defects.occlusion.present"]);
    c.uniform("defects.occlusion.aspect", &["defects.occlusion.present"]);
    c.beta("defects.blur.present", T);
    c.uniform("defects.blur.radius", &["defects.blur.present"]);
    c.decls
}

/// Exemplar hyperparameters used only to register the family of each node.
fn exemplar(family: Family) -> DistributionSpec {
    match family {
        Family::DirichletCategorical => {
            DistributionSpec::DirichletCategorical { alpha: Concentration::Symmetric(1.0) }
        }
        Family::BetaBernoulli => DistributionSpec::BetaBernoulli { a: 1.0, b: 1.0 },
        Family::NormalInvGamma => DistributionSpec::NormalInvGamma {
            prior_mean: 0.0,
            prior_var: 1.0,
            var_shape: 2.0,
            var_scale: 1.0,
            min: None,
            max: None,
        },
        Family::ShiftedExponential => {
            DistributionSpec::ShiftedExponential { location: 0.0, shape: 1.0, scale: 1.0, max: None }
        }
        Family::Poisson => DistributionSpec::Poisson { rate: 1.0, min: None, max: None },
        Family::TruncatedCauchy => {
            DistributionSpec::TruncatedCauchy { location: 0.0, scale: 1.0, min: -1.0, max: 1.0 }
        }
        Family::UniformContinuous => DistributionSpec::UniformContinuous { min: 0.0, max: 1.0 },
        Family::UniformDiscrete => DistributionSpec::UniformDiscrete { min: 0, max: 1 },
    }
}

/// Node declarations in registration order.
pub fn declarations() -> &'static [NodeDecl] {
    static DECLS: OnceLock<Vec<NodeDecl>> = OnceLock::new();
    DECLS.get_or_init(build_catalog)
}

pub fn declaration(id: &str) -> Option<&'static NodeDecl> {
    declarations().iter().find(|d| d.id == id)
}

/// The document network as a validated registry.
pub fn network() -> &'static Registry {
    static REGISTRY: OnceLock<Registry> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let nodes = declarations()
            .iter()
            .map(|d| NodeRef::new(d.id.clone(), exemplar(d.family)).with_parents(d.parents.clone()))
            .collect();
        Registry::build(nodes).expect("document network is a valid DAG")
    })
}
