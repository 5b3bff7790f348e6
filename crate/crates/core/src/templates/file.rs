//! Template file format: TOML with `include` chains, node tables at the top
//! level (`[table.rows]`, `[defects.blur.present]`) and an `[overrides]` tree.

use std::path::{Path, PathBuf};

use super::resources::{assets_dir, resolve_ref};
use super::{
    apply_preset_overrides, FontFace, Overrides, PageSpec, Palette, ResourceRefs, TemplateError, TemplateMixture,
    TemplateSpec,
};
use crate::probnet::{DistributionSpec, NodeParams};

fn parse_error(path: &Path, text: &str, err: &toml::de::Error) -> TemplateError {
    let line = err.span().map_or(0, |s| text[..s.start.min(text.len())].matches('\n').count() + 1);
    TemplateError::Parse { path: path.to_path_buf(), line, message: err.message().to_string() }
}

fn field_error(path: &Path, message: impl Into<String>) -> TemplateError {
    TemplateError::Parse { path: path.to_path_buf(), line: 0, message: message.into() }
}

fn read_table(path: &Path) -> Result<(String, toml::Table), TemplateError> {
    let text = std::fs::read_to_string(path).map_err(|source| TemplateError::Io { path: path.to_path_buf(), source })?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| parse_error(path, &text, &e))?;
    Ok((text, table))
}

fn absolutize(value: &mut toml::Value, base: &Path) {
    if let toml::Value::String(s) = value {
        *s = resolve_ref(s, base).to_string_lossy().into_owned();
    } else if let toml::Value::Array(items) = value {
        for item in items {
            absolutize(item, base);
        }
    }
}

/// Rewrite every path-valued key relative to the file that declares it.
fn absolutize_paths(table: &mut toml::Table, base: &Path) {
    if let Some(v) = table.get_mut("include") {
        absolutize(v, base);
    }
    if let Some(toml::Value::Table(res)) = table.get_mut("resources") {
        for key in ["corpus", "images"] {
            if let Some(v) = res.get_mut(key) {
                absolutize(v, base);
            }
        }
    }
    if let Some(toml::Value::Array(fonts)) = table.get_mut("fonts") {
        for face in fonts {
            if let toml::Value::Table(face) = face {
                for key in ["regular", "bold", "italic", "bold_italic"] {
                    if let Some(v) = face.get_mut(key) {
                        absolutize(v, base);
                    }
                }
            }
        }
    }
    if let Some(toml::Value::Table(mix)) = table.get_mut("mixture") {
        if let Some(v) = mix.get_mut("templates") {
            absolutize(v, base);
        }
    }
}

/// Tables merge key by key; a table holding `family` is a whole node and
/// replaces its counterpart; every other value replaces.
fn deep_merge(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) if !o.contains_key("family") => deep_merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn load_raw(path: &Path, stack: &mut Vec<PathBuf>) -> Result<toml::Table, TemplateError> {
    let canonical = path.canonicalize().map_err(|source| TemplateError::Io { path: path.to_path_buf(), source })?;
    if stack.contains(&canonical) {
        return Err(TemplateError::IncludeCycle(canonical));
    }
    stack.push(canonical);
    let (_, mut table) = read_table(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    absolutize_paths(&mut table, base);
    let includes = match table.remove("include") {
        None => Vec::new(),
        Some(toml::Value::Array(items)) => items
            .into_iter()
            .map(|v| v.as_str().map(PathBuf::from).ok_or_else(|| field_error(path, "`include` entries must be strings")))
            .collect::<Result<_, _>>()?,
        Some(toml::Value::String(s)) => vec![PathBuf::from(s)],
        Some(_) => return Err(field_error(path, "`include` must be a string or a list of strings")),
    };
    let mut merged = toml::Table::new();
    for inc in includes {
        deep_merge(&mut merged, load_raw(&inc, stack)?);
    }
    deep_merge(&mut merged, table);
    stack.pop();
    Ok(merged)
}

fn flatten_nodes(
    table: toml::Table,
    prefix: &str,
    path: &Path,
    out: &mut NodeParams,
) -> Result<(), TemplateError> {
    for (key, value) in table {
        let id = if prefix.is_empty() { key } else { format!("{prefix}.{key}") };
        match value {
            toml::Value::Table(t) if t.contains_key("family") => {
                let spec: DistributionSpec = toml::Value::Table(t)
                    .try_into()
                    .map_err(|e: toml::de::Error| TemplateError::InvalidParam { node: id.clone(), reason: e.message().to_string() })?;
                out.insert(id, spec);
            }
            toml::Value::Table(t) => flatten_nodes(t, &id, path, out)?,
            _ => return Err(field_error(path, format!("`{id}` is neither a node nor a group of nodes"))),
        }
    }
    Ok(())
}

fn flatten_overrides(table: toml::Table, prefix: &str, out: &mut Overrides) -> Result<(), TemplateError> {
    let (tables, fields): (Vec<_>, Vec<_>) = table.into_iter().partition(|(_, v)| v.is_table());
    if !fields.is_empty() {
        if prefix.is_empty() {
            return Err(TemplateError::UnknownOverrideKey(fields[0].0.clone()));
        }
        out.entry(prefix.to_string()).or_default().extend(fields);
    }
    for (key, value) in tables {
        let id = if prefix.is_empty() { key } else { format!("{prefix}.{key}") };
        if let toml::Value::Table(t) = value {
            flatten_overrides(t, &id, out)?;
        }
    }
    Ok(())
}

fn take<T: serde::de::DeserializeOwned>(
    table: &mut toml::Table,
    key: &str,
    path: &Path,
) -> Result<Option<T>, TemplateError> {
    table
        .remove(key)
        .map(|v| v.try_into().map_err(|e: toml::de::Error| field_error(path, format!("`{key}`: {}", e.message()))))
        .transpose()
}

fn build_template(mut table: toml::Table, path: &Path) -> Result<TemplateSpec, TemplateError> {
    let template_id: String = take(&mut table, "id", path)?.ok_or_else(|| field_error(path, "missing `id`"))?;
    let display_name: String = take(&mut table, "name", path)?.unwrap_or_else(|| template_id.clone());
    let page: PageSpec = take(&mut table, "page", path)?.unwrap_or_default();
    let resources: ResourceRefs =
        take(&mut table, "resources", path)?.ok_or_else(|| field_error(path, "missing `[resources]`"))?;
    let fonts: Vec<FontFace> = take(&mut table, "fonts", path)?.ok_or_else(|| field_error(path, "missing `[[fonts]]`"))?;
    let palette: Palette = take(&mut table, "palette", path)?.ok_or_else(|| field_error(path, "missing `[palette]`"))?;
    let overrides = match table.remove("overrides") {
        Some(toml::Value::Table(t)) => {
            let mut o = Overrides::new();
            flatten_overrides(t, "", &mut o)?;
            o
        }
        Some(_) => return Err(field_error(path, "`overrides` must be a table")),
        None => Overrides::new(),
    };
    table.remove("mixture");
    let mut params = NodeParams::new();
    flatten_nodes(table, "", path, &mut params)?;
    let spec = TemplateSpec { template_id, display_name, page, resources, fonts, palette, params };
    apply_preset_overrides(&spec, &overrides)
}

/// Parse a template from text; relative paths resolve against `base_dir`.
/// `include` is not followed.
pub fn parse_template_str(text: &str, base_dir: &Path) -> Result<TemplateSpec, TemplateError> {
    let pseudo = base_dir.join("<string>");
    let mut table: toml::Table = toml::from_str(text).map_err(|e| parse_error(&pseudo, text, &e))?;
    absolutize_paths(&mut table, base_dir);
    table.remove("include");
    build_template(table, &pseudo)
}

fn load_template_file(path: &Path, lang: Option<&Path>) -> Result<TemplateSpec, TemplateError> {
    let mut raw = load_raw(path, &mut Vec::new())?;
    if let Some(lang) = lang {
        deep_merge(&mut raw, load_raw(lang, &mut Vec::new())?);
    }
    build_template(raw, path)
}

pub(super) fn load_mixture_file(path: &Path, lang: Option<&Path>) -> Result<TemplateMixture, TemplateError> {
    let mut raw = load_raw(path, &mut Vec::new())?;
    let Some(mix) = raw.remove("mixture") else {
        return Ok(TemplateMixture::single(load_template_file(path, lang)?));
    };
    let mut mix = match mix {
        toml::Value::Table(t) => t,
        _ => return Err(field_error(path, "`mixture` must be a table")),
    };
    let templates: Vec<PathBuf> =
        take(&mut mix, "templates", path)?.ok_or_else(|| field_error(path, "`mixture.templates` missing"))?;
    let alpha: Vec<f64> = take(&mut mix, "alpha", path)?.unwrap_or_else(|| vec![1.0; templates.len()]);
    if let Some(key) = mix.keys().next() {
        return Err(field_error(path, format!("unknown key `mixture.{key}`")));
    }
    let templates =
        templates.iter().map(|p| load_template_file(p, lang)).collect::<Result<Vec<_>, _>>()?;
    Ok(TemplateMixture { alpha, templates })
}

fn portable(path: &Path) -> String {
    let assets = assets_dir();
    match path.strip_prefix(&assets) {
        Ok(rel) => format!("builtin:{}", rel.to_string_lossy().replace('\\', "/")),
        Err(_) => path.to_string_lossy().into_owned(),
    }
}

fn insert_nested(root: &mut toml::Table, id: &str, value: toml::Value) {
    let mut parts: Vec<&str> = id.split('.').collect();
    let last = parts.pop().unwrap_or(id);
    let mut cur = root;
    for p in parts {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .expect("node groups are tables");
    }
    cur.insert(last.to_string(), value);
}

/// Serialize a template in the same format `load_mixture` reads.
pub fn template_to_toml(spec: &TemplateSpec) -> String {
    let mut root = toml::Table::new();
    root.insert("id".into(), spec.template_id.clone().into());
    root.insert("name".into(), spec.display_name.clone().into());
    root.insert("page".into(), toml::Value::try_from(spec.page).expect("page serializes"));
    let mut res = toml::Table::new();
    res.insert("corpus".into(), portable(&spec.resources.corpus).into());
    res.insert("images".into(), portable(&spec.resources.images).into());
    res.insert(
        "watermark_texts".into(),
        toml::Value::Array(spec.resources.watermark_texts.iter().cloned().map(Into::into).collect()),
    );
    root.insert("resources".into(), res.into());
    let fonts = spec
        .fonts
        .iter()
        .map(|f| {
            let mut t = toml::Table::new();
            t.insert("name".into(), f.name.clone().into());
            t.insert("regular".into(), portable(&f.regular).into());
            for (key, p) in [("bold", &f.bold), ("italic", &f.italic), ("bold_italic", &f.bold_italic)] {
                if let Some(p) = p {
                    t.insert(key.into(), portable(p).into());
                }
            }
            toml::Value::Table(t)
        })
        .collect();
    root.insert("fonts".into(), toml::Value::Array(fonts));
    root.insert("palette".into(), toml::Value::try_from(&spec.palette).expect("palette serializes"));
    for (id, node) in &spec.params {
        insert_nested(&mut root, id, toml::Value::try_from(node).expect("node serializes"));
    }
    toml::to_string(&root).expect("template serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_replaces_whole_nodes() {
        let mut base: toml::Table = toml::from_str(
            "[doc.header]\nfamily='beta_bernoulli'\na=1.0\nb=2.0\n[doc.title]\nfamily='beta_bernoulli'\na=1.0\nb=1.0\n",
        )
        .unwrap();
        let over: toml::Table = toml::from_str("[doc.header]\nfamily='beta_bernoulli'\na=5.0\nb=5.0\n").unwrap();
        deep_merge(&mut base, over);
        assert_eq!(base["doc"]["header"]["a"].as_float(), Some(5.0));
        assert!(base["doc"].get("title").is_some());
    }

    #[test]
    fn overrides_flatten_quoted_and_nested() {
        let t: toml::Table = toml::from_str("[\"table.h_pad\"]\nscale=2.0\n[doc.header]\na=0.1\n").unwrap();
        let mut o = Overrides::new();
        flatten_overrides(t, "", &mut o).unwrap();
        assert_eq!(o.keys().collect::<Vec<_>>(), ["doc.header", "table.h_pad"]);
    }

    #[test]
    fn parse_error_has_line() {
        let err = parse_template_str("id = 'x'\n[page\n", Path::new("/tmp")).unwrap_err();
        assert!(matches!(err, TemplateError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn serialized_template_round_trips() {
        let m = super::super::load_mixture(Path::new("forms")).unwrap();
        let t = &m.templates[0];
        let text = template_to_toml(t);
        let back = parse_template_str(&text, Path::new("/")).unwrap();
        assert_eq!(&back, t);
    }
}
