//! Ground-truth records, COCO export and ingest, dataset manifests.

mod metrics;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layout::PageBox;

pub use metrics::{
    category_csv, compute_alignment_index, compute_overlap_index, dataset_metrics, dataset_stats, histogram,
    histogram_csv, AlignmentIndex, Bin, CategoryStats, DatasetMetrics, DatasetStats, OverlapIndex,
};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Layout class of a ground-truth box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Title,
    Section,
    Table,
    TableCell,
    Figure,
    HeaderFooter,
    Paragraph,
    Bullet,
    Equation,
    Caption,
}

impl Category {
    pub const ALL: [Category; 10] = [
        Category::Title,
        Category::Section,
        Category::Table,
        Category::TableCell,
        Category::Figure,
        Category::HeaderFooter,
        Category::Paragraph,
        Category::Bullet,
        Category::Equation,
        Category::Caption,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Title => "title",
            Category::Section => "section",
            Category::Table => "table",
            Category::TableCell => "table_cell",
            Category::Figure => "figure",
            Category::HeaderFooter => "header_footer",
            Category::Paragraph => "paragraph",
            Category::Bullet => "bullet",
            Category::Equation => "equation",
            Category::Caption => "caption",
        }
    }

    /// Dense COCO category id, starting at 1.
    pub fn coco_id(self) -> u32 {
        Self::ALL.iter().position(|&c| c == self).expect("listed") as u32 + 1
    }

    pub fn from_coco_id(id: u32) -> Option<Self> {
        Self::ALL.get((id as usize).checked_sub(1)?).copied()
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.name() == name)
    }
}

/// One ground-truth box. Elements split across columns or pages appear once
/// per fragment with the same `element_id`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutElement {
    pub category: Category,
    pub bbox: PageBox,
    pub element_id: u32,
    pub parent_id: Option<u32>,
}

/// Annotations of one document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocumentAnnotations {
    pub doc_id: u64,
    pub width: u32,
    pub height: u32,
    /// Image file name of each page.
    pub pages: Vec<String>,
    pub elements: Vec<LayoutElement>,
}

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("malformed COCO file: {0}")]
    Coco(#[from] serde_json::Error),
    #[error("annotation {annotation} refers to unknown {what} {id}")]
    DanglingReference { annotation: u64, what: &'static str, id: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_index: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u32,
    /// `[x, y, width, height]` in pixels.
    pub bbox: [f64; 4],
    pub area: f64,
    #[serde(default)]
    pub iscrowd: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: u32,
    pub name: String,
    #[serde(default)]
    pub supercategory: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CocoDataset {
    pub images: Vec<CocoImage>,
    pub annotations: Vec<CocoAnnotation>,
    pub categories: Vec<CocoCategory>,
}

impl CocoDataset {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("COCO serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, AnnotateError> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn coco_categories() -> Vec<CocoCategory> {
    Category::ALL
        .iter()
        .map(|c| CocoCategory { id: c.coco_id(), name: c.name().to_string(), supercategory: "layout".to_string() })
        .collect()
}

/// COCO export ordered by document id, then page, then flow order.
pub fn export_coco(docs: &[DocumentAnnotations]) -> CocoDataset {
    let mut order: Vec<&DocumentAnnotations> = docs.iter().collect();
    order.sort_by_key(|d| d.doc_id);
    let mut images = Vec::new();
    let mut annotations = Vec::new();
    for doc in order {
        let first_image = images.len() as u64 + 1;
        for (page, file) in doc.pages.iter().enumerate() {
            images.push(CocoImage {
                id: first_image + page as u64,
                file_name: file.clone(),
                width: doc.width,
                height: doc.height,
                doc_id: Some(doc.doc_id),
                page_index: Some(page),
            });
        }
        for e in &doc.elements {
            let b = e.bbox;
            annotations.push(CocoAnnotation {
                id: annotations.len() as u64 + 1,
                image_id: first_image + b.page_index as u64,
                category_id: e.category.coco_id(),
                bbox: [f64::from(b.x), f64::from(b.y), f64::from(b.w), f64::from(b.h)],
                area: f64::from(b.w) * f64::from(b.h),
                iscrowd: 0,
                element_id: Some(e.element_id),
                parent_id: e.parent_id,
            });
        }
    }
    CocoDataset { images, annotations, categories: coco_categories() }
}

/// Group a COCO dataset back into documents. Images without document fields
/// are treated as single-page documents keyed by image id. Categories are
/// matched by name, so foreign id assignments are accepted.
pub fn ingest_coco(coco: &CocoDataset) -> Result<Vec<DocumentAnnotations>, AnnotateError> {
    let cat_by_id: BTreeMap<u32, Option<Category>> =
        coco.categories.iter().map(|c| (c.id, Category::from_name(&c.name))).collect();
    let mut docs: BTreeMap<u64, DocumentAnnotations> = BTreeMap::new();
    let mut image_at: BTreeMap<u64, (u64, usize)> = BTreeMap::new();
    for img in &coco.images {
        let doc_id = img.doc_id.unwrap_or(img.id);
        let page = img.page_index.unwrap_or(0);
        let doc = docs.entry(doc_id).or_insert_with(|| DocumentAnnotations {
            doc_id,
            width: img.width,
            height: img.height,
            pages: vec![],
            elements: vec![],
        });
        if doc.pages.len() <= page {
            doc.pages.resize(page + 1, String::new());
        }
        doc.pages[page] = img.file_name.clone();
        image_at.insert(img.id, (doc_id, page));
    }
    for a in &coco.annotations {
        let &(doc_id, page) = image_at.get(&a.image_id).ok_or(AnnotateError::DanglingReference {
            annotation: a.id,
            what: "image",
            id: a.image_id,
        })?;
        let category = cat_by_id
            .get(&a.category_id)
            .copied()
            .flatten()
            .or_else(|| if cat_by_id.is_empty() { Category::from_coco_id(a.category_id) } else { None })
            .ok_or(AnnotateError::DanglingReference { annotation: a.id, what: "category", id: u64::from(a.category_id) })?;
        let [x, y, w, h] = a.bbox;
        let bbox = PageBox {
            page_index: page,
            x: x.round() as i32,
            y: y.round() as i32,
            w: w.round().max(0.0) as u32,
            h: h.round().max(0.0) as u32,
        };
        let element_id = a.element_id.unwrap_or(a.id as u32);
        docs.get_mut(&doc_id).expect("doc exists").elements.push(LayoutElement {
            category,
            bbox,
            element_id,
            parent_id: a.parent_id,
        });
    }
    Ok(docs.into_values().collect())
}

/// One generated document in a manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub doc_id: u64,
    pub template_id: String,
    pub seed: u64,
    pub pages: Vec<String>,
    /// Distinct elements per category name.
    pub annotation_counts: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan_file: Option<String>,
    /// Values of selected plan variables, by variable name.
    pub plan_variables: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub forced_breaks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub schema_version: u32,
    pub generator_version: String,
    pub seed: u64,
    pub template: String,
    pub count: u64,
    pub dpi: u32,
    pub image_format: String,
    pub defects: bool,
    pub plan_only: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation_file: Option<String>,
    pub categories: Vec<CocoCategory>,
    pub notes: Vec<String>,
    pub documents: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, AnnotateError> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Distinct element ids per category.
pub fn element_counts(elements: &[LayoutElement]) -> BTreeMap<String, usize> {
    let mut seen: BTreeMap<Category, std::collections::BTreeSet<u32>> = BTreeMap::new();
    for e in elements {
        seen.entry(e.category).or_default().insert(e.element_id);
    }
    seen.into_iter().map(|(c, ids)| (c.name().to_string(), ids.len())).collect()
}
