//! Layout quality metrics and dataset statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{element_counts, Category, DatasetManifest, DocumentAnnotations, LayoutElement};

/// Sum of pairwise intersections over sum of areas, on the same page.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OverlapIndex {
    pub intersection: f64,
    pub area: f64,
}

impl OverlapIndex {
    pub fn value(&self) -> f64 {
        if self.area > 0.0 {
            self.intersection / self.area
        } else {
            0.0
        }
    }

    pub fn merge(self, o: OverlapIndex) -> OverlapIndex {
        OverlapIndex { intersection: self.intersection + o.intersection, area: self.area + o.area }
    }
}

/// Mean over elements of the smallest guide distance to a peer, in page widths.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlignmentIndex {
    pub sum: f64,
    pub count: usize,
}

impl AlignmentIndex {
    pub fn value(&self) -> f64 {
        if self.count > 0 {
            self.sum / self.count as f64
        } else {
            0.0
        }
    }

    pub fn merge(self, o: AlignmentIndex) -> AlignmentIndex {
        AlignmentIndex { sum: self.sum + o.sum, count: self.count + o.count }
    }
}

fn by_page(elements: &[LayoutElement]) -> BTreeMap<usize, Vec<&LayoutElement>> {
    let mut pages: BTreeMap<usize, Vec<&LayoutElement>> = BTreeMap::new();
    for e in elements.iter().filter(|e| e.category != Category::TableCell) {
        pages.entry(e.bbox.page_index).or_default().push(e);
    }
    pages
}

/// Overlap of the boxes of one document. Table cells nest in their table by
/// construction and are left out.
pub fn compute_overlap_index(elements: &[LayoutElement]) -> OverlapIndex {
    let mut out = OverlapIndex::default();
    for boxes in by_page(elements).values() {
        for (i, a) in boxes.iter().enumerate() {
            let ra = a.bbox.rect();
            out.area += ra.area() as f64;
            for b in &boxes[i + 1..] {
                out.intersection += ra.intersection_area(&b.bbox.rect()) as f64;
            }
        }
    }
    out
}

/// Alignment of the boxes of one document. Each element contributes the
/// smallest distance between one of its left, center or right guides and the
/// same guide of another element on its page; an element alone on its page
/// contributes zero.
pub fn compute_alignment_index(elements: &[LayoutElement], page_width: u32) -> AlignmentIndex {
    let w = f64::from(page_width.max(1));
    let guides = |e: &LayoutElement| {
        let r = e.bbox.rect();
        let (l, rt) = (f64::from(r.x), f64::from(r.right()));
        [l, (l + rt) / 2.0, rt]
    };
    let mut out = AlignmentIndex::default();
    for boxes in by_page(elements).values() {
        for (i, a) in boxes.iter().enumerate() {
            let ga = guides(a);
            let best = boxes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| {
                    let gb = guides(b);
                    (0..3).map(|k| (ga[k] - gb[k]).abs()).fold(f64::INFINITY, f64::min)
                })
                .fold(f64::INFINITY, f64::min);
            out.sum += if best.is_finite() { best / w } else { 0.0 };
            out.count += 1;
        }
    }
    out
}

/// Documents containing a category and its total instance count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub documents: usize,
    pub instances: usize,
}

/// One histogram bin `[low, high)`; the last bin of a variable is closed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub documents: usize,
    pub categories: BTreeMap<String, CategoryStats>,
    pub histograms: BTreeMap<String, Vec<Bin>>,
}

const CONTINUOUS_BINS: usize = 20;

/// Unit bins for integer-valued variables, equal-width bins otherwise.
pub fn histogram(values: &[f64]) -> Vec<Bin> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let Some(lo) = finite.iter().copied().reduce(f64::min) else { return vec![] };
    let hi = finite.iter().copied().fold(lo, f64::max);
    let discrete = finite.iter().all(|v| v.fract() == 0.0);
    let (low, width, n) = if discrete {
        (lo, 1.0, (hi - lo) as usize + 1)
    } else if hi > lo {
        (lo, (hi - lo) / CONTINUOUS_BINS as f64, CONTINUOUS_BINS)
    } else {
        (lo, 1.0, 1)
    };
    let mut bins: Vec<Bin> =
        (0..n).map(|i| Bin { low: low + width * i as f64, high: low + width * (i + 1) as f64, count: 0 }).collect();
    for v in finite {
        let i = (((v - low) / width).floor() as usize).min(n - 1);
        bins[i].count += 1;
    }
    bins
}

/// Category table and plan-variable histograms of a dataset.
pub fn dataset_stats(manifest: &DatasetManifest) -> DatasetStats {
    let mut s = DatasetStats { documents: manifest.documents.len(), ..Default::default() };
    let mut values: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for c in Category::ALL {
        s.categories.insert(c.name().to_string(), CategoryStats::default());
    }
    for doc in &manifest.documents {
        for (cat, &n) in &doc.annotation_counts {
            let e = s.categories.entry(cat.clone()).or_default();
            e.instances += n;
            e.documents += usize::from(n > 0);
        }
        for (var, v) in &doc.plan_variables {
            values.entry(var).or_default().extend(v);
        }
    }
    s.histograms = values.into_iter().map(|(k, v)| (k.to_string(), histogram(&v))).collect();
    s
}

pub fn histogram_csv(stats: &DatasetStats) -> String {
    let mut out = String::from("variable,bin_low,bin_high,count\n");
    for (var, bins) in &stats.histograms {
        for b in bins {
            out.push_str(&format!("{var},{},{},{}\n", b.low, b.high, b.count));
        }
    }
    out
}

pub fn category_csv(stats: &DatasetStats) -> String {
    let mut out = String::from("category,documents,instances\n");
    for c in Category::ALL {
        let e = stats.categories.get(c.name()).copied().unwrap_or_default();
        out.push_str(&format!("{},{},{}\n", c.name(), e.documents, e.instances));
    }
    out
}

/// Dataset-level layout metrics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetrics {
    pub overlap_index: f64,
    pub alignment_index: f64,
    pub mean_element_count: f64,
}

pub fn dataset_metrics(docs: &[DocumentAnnotations]) -> DatasetMetrics {
    let mut overlap = OverlapIndex::default();
    let mut align = AlignmentIndex::default();
    let mut total = 0usize;
    for doc in docs {
        overlap = overlap.merge(compute_overlap_index(&doc.elements));
        align = align.merge(compute_alignment_index(&doc.elements, doc.width));
        total += element_counts(&doc.elements).values().sum::<usize>();
    }
    DatasetMetrics {
        overlap_index: overlap.value(),
        alignment_index: align.value(),
        mean_element_count: if docs.is_empty() { 0.0 } else { total as f64 / docs.len() as f64 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{PageBox, Rect};

    fn el(page: usize, r: Rect, cat: Category, id: u32) -> LayoutElement {
        LayoutElement { category: cat, bbox: PageBox::new(page, r), element_id: id, parent_id: None }
    }

    #[test]
    fn overlap_of_disjoint_is_zero() {
        let e = [el(0, Rect::new(0, 0, 10, 10), Category::Paragraph, 0), el(0, Rect::new(10, 0, 10, 10), Category::Paragraph, 1)];
        assert_eq!(compute_overlap_index(&e).value(), 0.0);
    }

    #[test]
    fn overlap_counts_pairs_on_same_page_only() {
        let e = [
            el(0, Rect::new(0, 0, 10, 10), Category::Paragraph, 0),
            el(0, Rect::new(5, 0, 10, 10), Category::Figure, 1),
            el(1, Rect::new(0, 0, 10, 10), Category::Paragraph, 2),
            el(0, Rect::new(0, 0, 5, 5), Category::TableCell, 3),
        ];
        let o = compute_overlap_index(&e);
        assert_eq!(o.intersection, 50.0);
        assert_eq!(o.area, 300.0);
    }

    #[test]
    fn alignment_of_shared_left_edge_is_zero() {
        let e = [el(0, Rect::new(10, 0, 30, 10), Category::Paragraph, 0), el(0, Rect::new(10, 20, 70, 10), Category::Paragraph, 1)];
        assert_eq!(compute_alignment_index(&e, 100).value(), 0.0);
        let lonely = [el(0, Rect::new(13, 0, 30, 10), Category::Paragraph, 0)];
        assert_eq!(compute_alignment_index(&lonely, 100), AlignmentIndex { sum: 0.0, count: 1 });
        let off = [el(0, Rect::new(0, 0, 10, 10), Category::Paragraph, 0), el(0, Rect::new(5, 20, 20, 10), Category::Paragraph, 1)];
        // lefts 0/5, centers 5/15, rights 10/25
        assert!((compute_alignment_index(&off, 100).value() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn histograms_bin_discrete_and_continuous() {
        let d = histogram(&[1.0, 1.0, 3.0]);
        assert_eq!(d.len(), 3);
        assert_eq!(d.iter().map(|b| b.count).collect::<Vec<_>>(), vec![2, 0, 1]);
        let c = histogram(&[0.0, 0.5, 1.0]);
        assert_eq!(c.len(), CONTINUOUS_BINS);
        assert_eq!(c.iter().map(|b| b.count).sum::<usize>(), 3);
        assert_eq!(c.last().unwrap().count, 1);
        assert!(histogram(&[]).is_empty());
    }

    #[test]
    fn empty_dataset_is_all_zeros() {
        let m = dataset_metrics(&[]);
        assert_eq!(m, DatasetMetrics::default());
        let csv = histogram_csv(&DatasetStats::default());
        assert_eq!(csv, "variable,bin_low,bin_high,count\n");
    }
}
