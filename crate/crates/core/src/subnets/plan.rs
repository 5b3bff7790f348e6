//! The fully sampled variable tree of one document.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::color::{Fill, Rgb};
use crate::defects::DefectPlan;
use crate::probnet::Realized;

pub const PLAN_SCHEMA_VERSION: u32 = 1;

macro_rules! indexed_enum {
    ($(#[$m:meta])* $name:ident { $($variant:ident),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            /// Variant for a categorical draw; out-of-range indices saturate.
            pub fn from_index(i: usize) -> Self {
                Self::ALL[i.min(Self::ALL.len() - 1)]
            }

            pub fn index(self) -> usize {
                self as usize
            }
        }
    };
}

indexed_enum!(FontStyle { Regular, Bold, Italic, BoldItalic });
indexed_enum!(HAlign { Left, Center, Right });
indexed_enum!(BorderType { None, Box, TopRule, LeftBar });
indexed_enum!(
    /// Rule placement of a table.
    TableBorders { None, Rows, Columns, Header, Grid, Cells }
);
indexed_enum!(BulletType { Disc, Dash, Number, Square });
indexed_enum!(ChartType { Bar, Line, Scatter, Pie, Heatmap });
indexed_enum!(HeaderContent { LogoText, PageNumber, RunningTitle, Empty });
indexed_enum!(CaptionPosition { Above, Below });

impl FontStyle {
    pub fn is_bold(self) -> bool {
        matches!(self, FontStyle::Bold | FontStyle::BoldItalic)
    }

    pub fn is_italic(self) -> bool {
        matches!(self, FontStyle::Italic | FontStyle::BoldItalic)
    }
}

/// Document-wide font and color.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharedStyle {
    pub font_index: usize,
    pub font_name: String,
    /// Points.
    pub font_size: f64,
    pub text_color: Rgb,
}

/// Style of a text block, sampled once per document for sections and titles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextStyle {
    pub font_style: FontStyle,
    pub align: HAlign,
    pub fore_color: Rgb,
    pub back_color: Fill,
    pub border_type: BorderType,
    pub border_color: Rgb,
    pub font_scale: f64,
    /// Multiples of the document font size.
    pub pre_space: f64,
    pub post_space: f64,
}

/// Lines of vocabulary tokens.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionPlan {
    pub line_count: usize,
    pub words_per_line: Vec<usize>,
    pub tokens: Vec<Vec<usize>>,
    pub style: TextStyle,
}

pub type TitlePlan = SectionPlan;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParagraphPlan {
    pub line_count: usize,
    pub line_spacing: f64,
    pub block_spacing: f64,
    /// Sentence indices; with an empty sentence corpus, vocabulary indices.
    pub sentences: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulletItem {
    pub line_count: usize,
    pub sentences: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulletPlan {
    pub bullet_type: BulletType,
    /// Indent of the item text, in multiples of the font size.
    pub offset: f64,
    pub line_spacing: f64,
    pub block_spacing: f64,
    pub items: Vec<BulletItem>,
}

/// A glyph group and its script level: -1 subscript, 0 baseline, 1 superscript.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationGroup {
    pub text: String,
    pub level: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquationPlan {
    pub groups: Vec<EquationGroup>,
    pub spacing: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaptionPlan {
    pub position: CaptionPosition,
    pub line_count: usize,
    pub words_per_line: Vec<usize>,
    pub tokens: Vec<Vec<usize>>,
    pub font_style: FontStyle,
    pub font_scale: f64,
}

/// Content class of a table cell: empty, one line, or wrapped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellLines {
    Empty,
    Single,
    Wrapped,
}

impl CellLines {
    pub fn from_index(i: usize) -> Self {
        match i {
            0 => CellLines::Empty,
            1 => CellLines::Single,
            _ => CellLines::Wrapped,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum CellContent {
    Empty,
    Tokens(Vec<Vec<usize>>),
    /// Question of a question/answer pair, by pair index.
    Question(usize),
    Answer(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellPlan {
    pub lines: CellLines,
    pub content: CellContent,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub font_style: Option<FontStyle>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TablePlan {
    /// Fraction of the column width.
    pub width_fraction: f64,
    pub align: HAlign,
    pub borders: TableBorders,
    /// Multiples of the document font size.
    pub h_pad: f64,
    pub v_pad: f64,
    pub pre_space: f64,
    pub post_space: f64,
    pub rows: usize,
    pub cols: usize,
    pub cell_width_fractions: Vec<f64>,
    pub header_row: bool,
    pub font_style: FontStyle,
    pub header_style: FontStyle,
    pub cell_align: HAlign,
    pub header_fill: Fill,
    pub stripe: bool,
    pub question_answer: bool,
    pub font_scale: f64,
    /// Row-major, `rows` by `cols`.
    pub cells: Vec<Vec<CellPlan>>,
    pub caption: Option<CaptionPlan>,
}

/// One chart panel. `data` holds one row per series for bar and line charts,
/// x/y row pairs per series for scatter, a single row of wedge weights for pie
/// and the grid rows for heatmap. Values are uniform on [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubplotPlan {
    pub chart_type: ChartType,
    pub data: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FigureSource {
    /// Path relative to the image library root.
    LibraryImage { path: String },
    SyntheticChart { subplots: Vec<SubplotPlan> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FigurePlan {
    pub source: FigureSource,
    /// Fraction of the column width.
    pub width_fraction: f64,
    /// Height as a fraction of the column width.
    pub height_fraction: f64,
    pub pre_space: f64,
    pub post_space: f64,
    pub caption: Option<CaptionPlan>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeaderSlot {
    pub content: HeaderContent,
    pub align: HAlign,
    /// Words of a logo or running title.
    pub tokens: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeaderPlan {
    pub slots: Vec<HeaderSlot>,
    pub font_style: FontStyle,
    pub color: Rgb,
    pub font_scale: f64,
    pub rule: bool,
}

impl HeaderPlan {
    pub fn column_count(&self) -> usize {
        self.slots.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElementPlan {
    Section(SectionPlan),
    Table(TablePlan),
    Figure(FigurePlan),
    Paragraph(ParagraphPlan),
    Bullet(BulletPlan),
    Equation(EquationPlan),
}

impl ElementPlan {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ElementPlan::Section(_) => "section",
            ElementPlan::Table(_) => "table",
            ElementPlan::Figure(_) => "figure",
            ElementPlan::Paragraph(_) => "paragraph",
            ElementPlan::Bullet(_) => "bullet",
            ElementPlan::Equation(_) => "equation",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocumentPlan {
    pub schema_version: u32,
    pub doc_index: u64,
    pub seed: u64,
    pub template_index: usize,
    pub template_id: String,
    /// Realized mixture weights.
    pub template_probs: Vec<f64>,
    /// Fraction of the page width.
    pub margin: f64,
    pub columns: usize,
    pub column_widths: Vec<f64>,
    pub background: Rgb,
    pub shared_style: SharedStyle,
    pub header: Option<HeaderPlan>,
    pub footer: Option<HeaderPlan>,
    pub title: Option<TitlePlan>,
    pub body: Vec<ElementPlan>,
    pub defects: DefectPlan,
    /// First-stage parameters of every document-level node, by node id.
    pub realized: BTreeMap<String, Realized>,
}

impl DocumentPlan {
    /// The document's vocabulary distribution.
    pub fn vocabulary_probs(&self) -> Option<&[f64]> {
        self.realized.get("doc.vocabulary").and_then(Realized::probs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plans serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
