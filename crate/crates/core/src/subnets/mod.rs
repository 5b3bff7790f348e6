//! Generative subnetworks that sample a complete document plan.

pub mod network;
mod plan;
mod sample;

use std::path::PathBuf;

use thiserror::Error;

use crate::probnet::ProbError;
use crate::templates::TemplateError;

pub use plan::*;
pub use sample::{
    sample_bullet, sample_caption, sample_equation, sample_figure, sample_header, sample_paragraph, sample_section,
    sample_table, sample_text_style, PlanSampler, SampleCtx, TemplateAssets,
};

#[derive(Debug, Error)]
pub enum SubnetError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("node `{0}` is not part of the document network")]
    UnknownNode(String),
    #[error("image library {0} holds no images")]
    EmptyImageLibrary(PathBuf),
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use super::*;
    use crate::templates::load_mixture;

    fn sampler(name: &str) -> PlanSampler {
        PlanSampler::new(load_mixture(Path::new(name)).unwrap()).unwrap()
    }

    #[test]
    fn plans_are_deterministic() {
        let s = sampler("scientific");
        for i in 0..5 {
            assert_eq!(s.sample_document_plan(i, 42).unwrap(), s.sample_document_plan(i, 42).unwrap());
        }
        assert_ne!(s.sample_document_plan(0, 42).unwrap(), s.sample_document_plan(0, 43).unwrap());
    }

    #[test]
    fn plan_json_round_trip() {
        let s = sampler("mixture");
        for i in 0..20 {
            let plan = s.sample_document_plan(i, 7).unwrap();
            let back = DocumentPlan::from_json(&plan.to_json()).unwrap();
            assert_eq!(back, plan);
        }
    }

    #[test]
    fn plan_invariants_hold() {
        let s = sampler("mixture");
        for i in 0..100 {
            let p = s.sample_document_plan(i, 3).unwrap();
            assert!(p.margin > 0.0 && p.margin < 0.45);
            assert!((1..=3).contains(&p.columns));
            assert!(!p.body.is_empty());
            assert!(p.shared_style.font_size >= 8.0);
            let vocab = p.vocabulary_probs().unwrap().len();
            for e in &p.body {
                match e {
                    ElementPlan::Section(sec) => {
                        assert_eq!(sec.tokens.len(), sec.line_count);
                        assert!(sec.words_per_line.iter().all(|&w| w >= 1));
                        assert!(sec.tokens.iter().flatten().all(|&t| t < vocab));
                    }
                    ElementPlan::Table(t) => {
                        assert!(t.rows >= 1 && t.cols >= 1);
                        assert!((t.cell_width_fractions.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                        assert_eq!(t.cells.len(), t.rows);
                        assert!(t.h_pad >= 0.0 && t.v_pad >= 0.0);
                    }
                    ElementPlan::Figure(f) => {
                        assert!(f.width_fraction > 0.0 && f.width_fraction <= 1.0);
                        if let FigureSource::SyntheticChart { subplots } = &f.source {
                            assert!(!subplots.is_empty());
                            assert!(subplots.iter().flat_map(|s| s.data.iter().flatten()).all(|v| v.is_finite()));
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn sections_share_style() {
        let s = sampler("scientific");
        for i in 0..30 {
            let p = s.sample_document_plan(i, 11).unwrap();
            let styles: Vec<_> = p
                .body
                .iter()
                .filter_map(|e| if let ElementPlan::Section(s) = e { Some(&s.style) } else { None })
                .collect();
            assert!(styles.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn resume_has_no_header_or_footer() {
        let s = sampler("resume");
        for i in 0..200 {
            let p = s.sample_document_plan(i, 5).unwrap();
            assert!(p.header.is_none() && p.footer.is_none());
        }
    }

    #[test]
    fn forms_tables_are_question_answer() {
        let s = sampler("forms");
        let mut seen = 0;
        for i in 0..40 {
            for e in s.sample_document_plan(i, 9).unwrap().body {
                if let ElementPlan::Table(t) = e {
                    assert!(t.question_answer);
                    assert_eq!(t.cols, 2);
                    for row in &t.cells {
                        assert!(matches!((&row[0].content, &row[1].content), (CellContent::Question(a), CellContent::Answer(b)) if a == b));
                    }
                    seen += 1;
                }
            }
        }
        assert!(seen > 10);
    }
}
