//! Acceptance checks, one test per criterion. Heavy criteria are serialized
//! so their timings are not disturbed by each other.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use docgen::annotate::{
    compute_alignment_index, compute_overlap_index, dataset_stats, Category, DocumentAnnotations, LayoutElement,
};
use docgen::defects::{apply_defects, DefectPlan};
use docgen::layout::{PageBox, Payload, Rect};
use docgen::pipeline::{
    generate_dataset, plan_counts, read_manifest, DatasetConfig, GenerateError, Generator, GeneratorOptions,
};
use docgen::probnet::{
    posterior_update_beta, posterior_update_dirichlet, posterior_update_gamma_exponential, posterior_update_normal,
    Concentration, DistributionSpec, GammaParams, NormalPrior, Realized, RngStream,
};
use docgen::render::PageFormat;
use docgen::subnets::{CellContent, ElementPlan};

static HEAVY: Mutex<()> = Mutex::new(());

fn heavy() -> std::sync::MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict}: {detail}");
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn generator(template: &str, lang: Option<&str>, defects: bool) -> Generator {
    Generator::load(Path::new(template), lang, GeneratorOptions { dpi: None, defects }).unwrap()
}

fn config(out: &Path, count: u64, seed: u64, workers: usize) -> DatasetConfig {
    DatasetConfig {
        out: out.to_path_buf(),
        count,
        seed,
        workers,
        format: PageFormat::Png,
        emit_plans: false,
        plan_only: false,
        template: "scientific".into(),
        progress: false,
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}

/// Mean and variance of a density given by its log on a uniform grid.
fn grid_moments(xs: &[f64], log_density: impl Fn(f64) -> f64, jacobian: impl Fn(f64) -> f64) -> (f64, f64) {
    let logs: Vec<f64> = xs.iter().map(|&x| log_density(x)).collect();
    let peak = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (&x, &l) in xs.iter().zip(&logs) {
        let w = (l - peak).exp() * jacobian(x);
        z += w;
        m1 += w * x;
        m2 += w * x * x;
    }
    let mean = m1 / z;
    (mean, m2 / z - mean * mean)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Grid over `(0, inf)` evenly spaced in log space, returned with the
/// density Jacobian `x` for integrating in `ln x`.
fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

#[test]
fn criterion_1_conjugate_updates() {
    let t0 = Instant::now();
    let mut rng = RngStream::new(101);
    let mut failures = Vec::new();

    // Dirichlet and Beta against one-observation-at-a-time accumulation.
    for case in 0..1000 {
        let dim = 2 + (rng.unit() * 7.0) as usize;
        // dyadic concentrations keep repeated increments exact in binary
        let dyadic = |rng: &mut RngStream| (1.0 + (rng.unit() * 640.0).floor()) / 64.0;
        let alpha0: Vec<f64> = (0..dim).map(|_| dyadic(&mut rng)).collect();
        let counts: Vec<i64> = (0..dim).map(|_| (rng.unit() * 60.0) as i64).collect();
        let mut sequential = alpha0.clone();
        for (k, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                sequential[k] += 1.0;
            }
        }
        let post = posterior_update_dirichlet(&alpha0, &counts).unwrap();
        if post != sequential {
            failures.push(format!("dirichlet case {case}"));
        }

        let (a0, b0) = (dyadic(&mut rng), dyadic(&mut rng));
        let (s, f) = ((rng.unit() * 500.0) as i64, (rng.unit() * 500.0) as i64);
        let (mut a, mut b) = (a0, b0);
        for _ in 0..s {
            a += 1.0;
        }
        for _ in 0..f {
            b += 1.0;
        }
        if posterior_update_beta(a0, b0, s, f).unwrap() != (a, b) {
            failures.push(format!("beta case {case}"));
        }
    }

    // Beta moments against the grid-integrated posterior on [0, 1].
    let unit = linspace(1e-9, 1.0 - 1e-9, 200_001);
    for case in 0..20 {
        let (a0, b0) = (0.5 + rng.unit() * 5.0, 0.5 + rng.unit() * 5.0);
        let (s, f) = ((rng.unit() * 40.0) as i64, (rng.unit() * 40.0) as i64);
        let (a, b) = posterior_update_beta(a0, b0, s, f).unwrap();
        let (gm, gv) = grid_moments(
            &unit,
            |p| (a0 - 1.0) * p.ln() + (b0 - 1.0) * (1.0 - p).ln() + s as f64 * p.ln() + f as f64 * (1.0 - p).ln(),
            |_| 1.0,
        );
        let (m, v) = (a / (a + b), a * b / ((a + b).powi(2) * (a + b + 1.0)));
        if rel_err(m, gm) > 0.01 || rel_err(v, gv) > 0.01 {
            failures.push(format!("beta grid case {case}: ({m}, {v}) vs ({gm}, {gv})"));
        }
    }

    // Gamma prior on the exponential rate.
    let rates = log_grid(1e-8, 1e8, 400_001);
    for case in 0..20 {
        let prior = GammaParams { shape: 0.5 + rng.unit() * 5.0, scale: 0.2 + rng.unit() * 3.0 };
        let location = -2.0 + rng.unit() * 4.0;
        let true_rate = 0.2 + rng.unit() * 5.0;
        let n = 1 + (rng.unit() * 30.0) as usize;
        let obs: Vec<f64> = (0..n).map(|_| location - rng.open_unit().ln() / true_rate).collect();
        let post = posterior_update_gamma_exponential(prior, &obs, location).unwrap();
        let excess: f64 = obs.iter().map(|x| x - location).sum();
        let (gm, gv) = grid_moments(
            &rates,
            |r| (prior.shape - 1.0) * r.ln() - r / prior.scale + n as f64 * r.ln() - r * excess,
            |r| r,
        );
        if rel_err(post.mean(), gm) > 0.01 || rel_err(post.variance(), gv) > 0.01 {
            failures.push(format!("gamma case {case}: ({}, {}) vs ({gm}, {gv})", post.mean(), post.variance()));
        }
    }

    // Normal mean given the plug-in variance, then variance given the new mean.
    let variances = log_grid(1e-6, 1e6, 400_001);
    for case in 0..20 {
        let prior = NormalPrior {
            prior_mean: 5.0 + rng.unit() * 40.0,
            prior_var: 0.5 + rng.unit() * 20.0,
            var_shape: 1.5 + rng.unit() * 5.0,
            var_scale: 0.5 + rng.unit() * 10.0,
        };
        let (mu, sd) = (5.0 + rng.unit() * 40.0, 0.3 + rng.unit() * 3.0);
        let n = 6 + (rng.unit() * 40.0) as usize;
        let obs: Vec<f64> = (0..n)
            .map(|_| {
                let (u1, u2) = (rng.open_unit(), rng.unit());
                mu + sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let post = posterior_update_normal(prior, &obs);

        let plug_in = prior.var_scale / (prior.var_shape - 1.0);
        let spread = (prior.prior_var + plug_in).sqrt();
        let lo = obs.iter().copied().fold(prior.prior_mean, f64::min) - 20.0 * spread;
        let hi = obs.iter().copied().fold(prior.prior_mean, f64::max) + 20.0 * spread;
        let (gm, gv) = grid_moments(
            &linspace(lo, hi, 400_001),
            |m| {
                -(m - prior.prior_mean).powi(2) / (2.0 * prior.prior_var)
                    - obs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (2.0 * plug_in)
            },
            |_| 1.0,
        );
        let sq: f64 = obs.iter().map(|x| (x - gm).powi(2)).sum();
        let (gvm, gvv) = grid_moments(
            &variances,
            |v| -(prior.var_shape + 1.0 + n as f64 / 2.0) * v.ln() - (prior.var_scale + sq / 2.0) / v,
            |v| v,
        );
        let (a, b) = (post.var_shape, post.var_scale);
        let (vm, vv) = (b / (a - 1.0), b * b / ((a - 1.0).powi(2) * (a - 2.0)));
        let errs = [
            rel_err(post.prior_mean, gm),
            rel_err(post.prior_var, gv),
            rel_err(vm, gvm),
            rel_err(vv, gvv),
        ];
        if errs.iter().any(|&e| e > 0.01) {
            failures.push(format!("normal case {case}: relative errors {errs:?}"));
        }
    }

    let elapsed = t0.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(60);
    report(1, pass, &format!("{} failing cases {:?}, {elapsed:.1?}", failures.len(), failures.first()));
}

struct Moments {
    n: f64,
    mean: f64,
    var: f64,
    m4: f64,
}

fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Moments { n, mean, var, m4 }
}

/// Whether sample mean and variance lie within three standard errors.
fn within_3se(m: &Moments, mean: f64, var: f64) -> Result<(), String> {
    let se_mean = (var / m.n).sqrt();
    let se_var = ((m.m4 - m.var * m.var).max(0.0) / m.n).sqrt();
    if (m.mean - mean).abs() > 3.0 * se_mean {
        return Err(format!("mean {} vs {mean} (se {se_mean})", m.mean));
    }
    if (m.var - var).abs() > 3.0 * se_var {
        return Err(format!("variance {} vs {var} (se {se_var})", m.var));
    }
    Ok(())
}

fn draws(spec: &DistributionSpec, seed: u64, n: usize) -> Vec<f64> {
    let mut rng = RngStream::new(seed);
    (0..n).map(|_| spec.draw_params(&mut rng, None).draw(&mut rng).as_f64()).collect()
}

/// Mean and variance of a Cauchy truncated to `[min, max]`, by quadrature.
fn truncated_cauchy_moments(location: f64, scale: f64, min: f64, max: f64) -> (f64, f64) {
    grid_moments(&linspace(min, max, 2_000_001), |x| -(1.0 + ((x - location) / scale).powi(2)).ln(), |_| 1.0)
}

#[test]
fn criterion_2_sampling_fidelity() {
    let t0 = Instant::now();
    const N: usize = 100_000;
    let mut failures: Vec<String> = Vec::new();
    let mut check = |name: &str, xs: &[f64], mean: f64, var: Option<f64>| {
        let m = moments(xs);
        let result = match var {
            Some(var) => within_3se(&m, mean, var),
            // indicator series: the variance follows from the mean
            None => within_3se(&Moments { var: mean * (1.0 - mean), ..m }, mean, mean * (1.0 - mean)),
        };
        if let Err(e) = result {
            failures.push(format!("{name}: {e}"));
        }
    };

    let alpha = [2.0, 1.0, 3.0];
    let xs = draws(&DistributionSpec::DirichletCategorical { alpha: Concentration::Explicit(alpha.to_vec()) }, 1, N);
    let p: Vec<f64> = alpha.iter().map(|a| a / 6.0).collect();
    for (k, &pk) in p.iter().enumerate() {
        let ind: Vec<f64> = xs.iter().map(|&x| f64::from(u8::from(x as usize == k))).collect();
        check(&format!("dirichlet_categorical[{k}]"), &ind, pk, None);
    }
    let mean: f64 = p.iter().enumerate().map(|(k, pk)| k as f64 * pk).sum();
    let var: f64 = p.iter().enumerate().map(|(k, pk)| (k as f64 - mean).powi(2) * pk).sum();
    check("dirichlet_categorical", &xs, mean, Some(var));

    let xs = draws(&DistributionSpec::BetaBernoulli { a: 2.0, b: 5.0 }, 2, N);
    check("beta_bernoulli", &xs, 2.0 / 7.0, None);

    let nig = DistributionSpec::NormalInvGamma {
        prior_mean: 3.0,
        prior_var: 0.5,
        var_shape: 6.0,
        var_scale: 5.0,
        min: None,
        max: None,
    };
    check("normal_inv_gamma", &draws(&nig, 3, N), 3.0, Some(0.5 + 5.0 / 5.0));

    let exp = DistributionSpec::ShiftedExponential { location: 2.0, shape: 4.0, scale: 0.5, max: None };
    // E[scale] = 2, E[scale^2] = 5, excess variance = 2 E[scale^2] - E[scale]^2
    check("shifted_exponential", &draws(&exp, 4, N), 4.0, Some(6.0));

    check("poisson", &draws(&DistributionSpec::Poisson { rate: 3.5, min: None, max: None }, 5, N), 3.5, Some(3.5));

    for (i, (loc, scale, lo, hi)) in [(0.0, 1.0, -10.0, 10.0), (1.0, 2.0, -5.0, 20.0)].into_iter().enumerate() {
        let spec = DistributionSpec::TruncatedCauchy { location: loc, scale, min: lo, max: hi };
        let (m, v) = truncated_cauchy_moments(loc, scale, lo, hi);
        check(&format!("truncated_cauchy[{i}]"), &draws(&spec, 6 + i as u64, N), m, Some(v));
    }

    check("uniform_continuous", &draws(&DistributionSpec::UniformContinuous { min: 2.0, max: 7.0 }, 8, N), 4.5, Some(25.0 / 12.0));
    check("uniform_discrete", &draws(&DistributionSpec::UniformDiscrete { min: 1, max: 6 }, 9, N), 3.5, Some(35.0 / 12.0));

    // Heavy tail against a normal control of the same scale.
    let cauchy = draws(&DistributionSpec::TruncatedCauchy { location: 0.0, scale: 1.0, min: -1e6, max: 1e6 }, 10, N);
    let mut rng = RngStream::new(11);
    let control: Vec<f64> = (0..N)
        .map(|_| Realized::Normal { mean: 0.0, var: 1.0, min: None, max: None }.draw(&mut rng).as_f64())
        .collect();
    let tail = |xs: &[f64]| xs.iter().filter(|&&x| x > 3.0).count();
    let (ct, nt) = (tail(&cauchy), tail(&control));
    if ct <= nt {
        failures.push(format!("cauchy tail {ct} not above normal tail {nt}"));
    }

    // Template selection under the bundled mixture.
    let gen = generator("mixture", None, false);
    let alpha = &gen.sampler().mixture.alpha;
    let total: f64 = alpha.iter().sum();
    let mut seen = vec![0usize; alpha.len()];
    for d in 0..10_000 {
        seen[gen.plan(d, 12).unwrap().template_index] += 1;
    }
    let freq_err = seen
        .iter()
        .zip(alpha)
        .map(|(&c, a)| (c as f64 / 10_000.0 - a / total).abs())
        .fold(0.0, f64::max);
    if freq_err > 0.02 {
        failures.push(format!("template frequencies {seen:?} off by {freq_err}"));
    }

    let elapsed = t0.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(120);
    report(2, pass, &format!("tail {ct} vs {nt}, template error {freq_err:.4}, {elapsed:.1?}, failures {failures:?}"));
}

#[test]
fn criterion_3_category_structure() {
    let _g = heavy();
    let dir = tempfile::tempdir().unwrap();
    let gen = generator("scientific", None, true);
    let cfg = DatasetConfig { plan_only: true, ..config(dir.path(), 10_000, 3, 1) };
    let t0 = Instant::now();
    generate_dataset(&gen, &cfg).unwrap();
    let elapsed = t0.elapsed();
    let stats = dataset_stats(&read_manifest(dir.path()).unwrap());
    let c = |name: &str| stats.categories[name];
    let title_equal = c("title").documents == c("title").instances;
    let section_repeats = c("section").instances > c("section").documents;
    let six = ["header_footer", "title", "section", "equation", "table", "figure"];
    let all_present = six.iter().all(|n| c(n).instances > 0);
    let table: Vec<String> =
        six.iter().map(|n| format!("{n} {}/{}", c(n).documents, c(n).instances)).collect();
    report(
        3,
        title_equal && section_repeats && all_present && elapsed < Duration::from_secs(120),
        &format!("{}; plan-only {elapsed:.1?}", table.join(", ")),
    );
}

fn contained(r: Rect, outer: Rect) -> bool {
    r.x >= outer.x && r.y >= outer.y && r.right() <= outer.right() && r.bottom() <= outer.bottom()
}

#[test]
fn criterion_4_geometric_invariants() {
    let _g = heavy();
    let gen = generator("scientific", None, true);
    let (mut outside, mut sibling_overlaps, mut miscounted, mut leaky) = (0, 0, 0, 0);
    let mut worst_ink = 1.0f64;
    let mut elements = 0usize;
    for d in 0..1000 {
        let plan = gen.plan(d, 4).unwrap();
        let composed = gen.compose(&plan).unwrap();
        let page = Rect::new(0, 0, composed.geometry.width, composed.geometry.height);
        let els = &composed.elements;
        elements += els.len();

        outside += els.iter().filter(|e| !contained(e.bbox.rect(), page) || e.bbox.page_index >= composed.page_count).count();
        for (i, a) in els.iter().enumerate() {
            for b in &els[i + 1..] {
                let siblings = a.parent_id == b.parent_id && a.element_id != b.element_id;
                if siblings && a.bbox.page_index == b.bbox.page_index && a.bbox.rect().intersection_area(&b.bbox.rect()) > 0 {
                    sibling_overlaps += 1;
                }
            }
        }

        let mut laid_out = docgen::annotate::element_counts(els);
        laid_out.remove("header_footer");
        let mut planned = plan_counts(&plan);
        planned.remove("header_footer");
        if laid_out != planned {
            miscounted += 1;
        }

        let (_, audit) = gen.render_audited(&plan, &composed).unwrap();
        for i in 0..els.len() {
            let f = audit.inside_fraction(i);
            worst_ink = worst_ink.min(f);
            if f < 0.99 {
                leaky += 1;
            }
        }
    }
    report(
        4,
        outside == 0 && sibling_overlaps == 0 && miscounted == 0 && leaky == 0,
        &format!(
            "{elements} boxes: {outside} outside page, {sibling_overlaps} sibling overlaps, \
             {miscounted} documents miscounted, {leaky} boxes under 99% ink (worst {worst_ink:.4})"
        ),
    );
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    walkdir::WalkDir::new(dir)
        .into_iter()
        .map(Result::unwrap)
        .filter(|e| e.file_type().is_file())
        .map(|e| (e.path().strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(e.path()).unwrap()))
        .collect()
}

#[test]
fn criterion_5_determinism() {
    let _g = heavy();
    let gen = generator("mixture", None, true);
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    for (dir, workers) in dirs.iter().zip([1, 1, 8]) {
        let cfg = DatasetConfig { emit_plans: true, template: "mixture".into(), ..config(dir.path(), 100, 5, workers) };
        generate_dataset(&gen, &cfg).unwrap();
    }
    let trees: Vec<_> = dirs.iter().map(|d| tree(d.path())).collect();
    let files = trees[0].len();
    let bytes: usize = trees[0].values().map(Vec::len).sum();
    report(
        5,
        files > 100 && trees[0] == trees[1] && trees[0] == trees[2],
        &format!("{files} files, {bytes} bytes; repeat equal {}, 1 vs 8 workers equal {}", trees[0] == trees[1], trees[0] == trees[2]),
    );
}

#[test]
fn criterion_6_defect_contract() {
    let _g = heavy();
    let (on, off) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_dataset(&generator("scientific", None, true), &config(on.path(), 40, 6, 1)).unwrap();
    generate_dataset(&generator("scientific", None, false), &config(off.path(), 40, 6, 1)).unwrap();
    let read = |d: &Path| std::fs::read(d.join("annotations.json")).unwrap();
    let same_annotations = read(on.path()) == read(off.path());
    let pages_differ = tree(&on.path().join("images")) != tree(&off.path().join("images"));

    let gen = generator("scientific", None, false);
    let mut identity = true;
    for d in 0..20 {
        let doc = gen.generate(d, 6).unwrap();
        let mut pages = doc.pages.clone();
        let mut rng = RngStream::new(d);
        apply_defects(&mut pages, &DefectPlan::default(), gen.fonts(doc.plan.template_index), 0, &mut rng);
        identity &= pages == doc.pages;
    }
    report(
        6,
        same_annotations && identity && pages_differ,
        &format!("annotations identical {same_annotations}, empty plan identity {identity}, defects visible {pages_differ}"),
    );
}

fn random_layout(rng: &mut RngStream, doc_id: u64) -> DocumentAnnotations {
    let (w, h) = (200 + (rng.unit() * 400.0) as u32, 200 + (rng.unit() * 400.0) as u32);
    let pages = 1 + (rng.unit() * 3.0) as usize;
    let n = (rng.unit() * 25.0) as usize;
    let elements = (0..n)
        .map(|i| {
            let x = (rng.unit() * f64::from(w) * 0.9) as i32;
            let y = (rng.unit() * f64::from(h) * 0.9) as i32;
            let bw = 1 + (rng.unit() * (f64::from(w) - f64::from(x) - 1.0)) as u32;
            let bh = 1 + (rng.unit() * (f64::from(h) - f64::from(y) - 1.0)) as u32;
            let category = Category::ALL[(rng.unit() * 10.0) as usize % 10];
            let page = (rng.unit() * pages as f64) as usize % pages;
            LayoutElement { category, bbox: PageBox::new(page, Rect::new(x, y, bw, bh)), element_id: i as u32, parent_id: None }
        })
        .collect();
    DocumentAnnotations { doc_id, width: w, height: h, pages: vec![String::new(); pages], elements }
}

/// Pairwise overlap by pixel coverage: a pixel covered k times contributes k(k-1)/2.
fn overlap_oracle(doc: &DocumentAnnotations) -> (f64, f64) {
    let (w, h) = (doc.width as usize, doc.height as usize);
    let (mut inter, mut area) = (0u64, 0u64);
    for page in 0..doc.pages.len() {
        let mut cover = vec![0u64; w * h];
        for e in doc.elements.iter().filter(|e| e.bbox.page_index == page && e.category != Category::TableCell) {
            let r = e.bbox.rect();
            for y in r.y as usize..r.bottom() as usize {
                for x in r.x as usize..r.right() as usize {
                    cover[y * w + x] += 1;
                    area += 1;
                }
            }
        }
        inter += cover.iter().map(|&k| k * k.saturating_sub(1) / 2).sum::<u64>();
    }
    (inter as f64, area as f64)
}

/// Alignment by sorted guide lists and a neighbour search.
fn alignment_oracle(doc: &DocumentAnnotations) -> (f64, usize) {
    let (mut sum, mut count) = (0.0, 0);
    for page in 0..doc.pages.len() {
        let els: Vec<_> =
            doc.elements.iter().filter(|e| e.bbox.page_index == page && e.category != Category::TableCell).collect();
        let guides = |k: usize| -> Vec<(f64, usize)> {
            let mut g: Vec<(f64, usize)> = els
                .iter()
                .enumerate()
                .map(|(i, e)| {
                    let r = e.bbox.rect();
                    let (l, rt) = (f64::from(r.x), f64::from(r.x) + f64::from(r.w));
                    ([l, (l + rt) / 2.0, rt][k], i)
                })
                .collect();
            g.sort_by(|a, b| a.partial_cmp(b).unwrap());
            g
        };
        let sorted = [guides(0), guides(1), guides(2)];
        for i in 0..els.len() {
            let mut best = f64::INFINITY;
            for g in &sorted {
                let pos = g.iter().position(|&(_, j)| j == i).unwrap();
                let v = g[pos].0;
                if pos > 0 {
                    best = best.min(v - g[pos - 1].0);
                }
                if pos + 1 < g.len() {
                    best = best.min(g[pos + 1].0 - v);
                }
            }
            sum += if best.is_finite() { best / f64::from(doc.width) } else { 0.0 };
            count += 1;
        }
    }
    (sum, count)
}

#[test]
fn criterion_7_metrics_self_test() {
    let mut rng = RngStream::new(7);
    let mut worst = 0.0f64;
    for d in 0..100 {
        let doc = random_layout(&mut rng, d);
        let o = compute_overlap_index(&doc.elements);
        let (oi, oa) = overlap_oracle(&doc);
        let a = compute_alignment_index(&doc.elements, doc.width);
        let (asum, acount) = alignment_oracle(&doc);
        let oracle_overlap = if oa > 0.0 { oi / oa } else { 0.0 };
        let oracle_align = if acount > 0 { asum / acount as f64 } else { 0.0 };
        worst = worst.max((o.value() - oracle_overlap).abs()).max((a.value() - oracle_align).abs());
        assert_eq!(a.count, acount);
    }

    let _g = heavy();
    let dir = tempfile::tempdir().unwrap();
    generate_dataset(&generator("mixture", None, true), &config(dir.path(), 30, 7, 1)).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_docgen"))
        .args(["metrics", "--a"])
        .arg(dir.path())
        .arg("--b")
        .arg(dir.path())
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    let zero = out.status.success()
        && rows.len() == 3
        && rows.iter().all(|r| r.rsplit(',').next().and_then(|v| v.parse::<f64>().ok()) == Some(0.0));
    report(7, worst <= 1e-6 && zero, &format!("largest oracle difference {worst:e}; self metrics zero {zero}"));
}

#[test]
fn criterion_8_domain_presets() {
    let _g = heavy();
    let resume = generator("resume", None, true);
    let mut header_footer = 0;
    for d in 0..1000 {
        let composed = resume.compose(&resume.plan(d, 8).unwrap()).unwrap();
        header_footer += composed.elements.iter().filter(|e| e.category == Category::HeaderFooter).count();
    }

    let forms = generator("forms", None, true);
    let (mut tables, mut paired) = (0, 0);
    for d in 0..200 {
        let plan = forms.plan(d, 8).unwrap();
        let composed = forms.compose(&plan).unwrap();
        for t in plan.body.iter().filter_map(|e| if let ElementPlan::Table(t) = e { Some(t) } else { None }) {
            tables += 1;
            let pairs = t.question_answer
                && t.cells.iter().all(|row| {
                    matches!((&row[..], row.first().map(|c| c.font_style), row.get(1).map(|c| c.font_style)),
                        ([q, a], Some(qs), Some(as_)) if qs != as_ && matches!((&q.content, &a.content),
                            (CellContent::Question(i), CellContent::Answer(j)) if i == j))
                });
            paired += usize::from(pairs);
        }
        let cells = composed.elements.iter().filter(|e| e.category == Category::TableCell).count();
        let planned: usize = plan
            .body
            .iter()
            .filter_map(|e| if let ElementPlan::Table(t) = e { Some(t.cells.len() * 2) } else { None })
            .sum();
        assert_eq!(cells, planned, "document {d}: every pair lays out as two cells");
    }

    let greek = generator("scientific", Some("el"), true);
    let (mut glyph_missing, mut other_errors, mut greek_docs) = (0, 0, 0);
    for d in 0..100 {
        match greek.generate(d, 8) {
            Ok(doc) => {
                let greek_text = doc.composed.placed.iter().any(|p| {
                    matches!(&p.payload, Payload::Text { text, .. } if text.chars().any(|c| ('\u{0370}'..='\u{03ff}').contains(&c)))
                });
                greek_docs += usize::from(greek_text);
                assert!(!doc.pages.is_empty());
            }
            Err(e) if e.code() == "FontGlyphMissing" => glyph_missing += 1,
            Err(GenerateError::Layout { .. } | GenerateError::Render { .. }) => other_errors += 1,
            Err(e) => panic!("{e}"),
        }
    }
    report(
        8,
        header_footer == 0 && tables > 0 && paired == tables && glyph_missing == 0 && other_errors == 0 && greek_docs == 100,
        &format!(
            "resume header/footer boxes {header_footer}; forms QA tables {paired}/{tables}; \
             Greek documents {greek_docs}/100 with {glyph_missing} FontGlyphMissing"
        ),
    );
}

#[test]
fn criterion_9_throughput() {
    let _g = heavy();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let dir = tempfile::tempdir().unwrap();
    let gen = generator("scientific", None, true);
    let t0 = Instant::now();
    let manifest = generate_dataset(&gen, &config(dir.path(), 1000, 9, cores)).unwrap();
    let elapsed = t0.elapsed();
    report(
        9,
        manifest.dpi == 150 && manifest.documents.len() == 1000 && elapsed <= Duration::from_secs(15 * 60),
        &format!("1000 documents at {} DPI in {elapsed:.1?} on {cores} core(s)", manifest.dpi),
    );
}
