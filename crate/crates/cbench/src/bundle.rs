//! Self-contained dashboard archive: the model document, precomputed
//! marginals and a static viewer. The raw dataset is never included.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use cbench_core::infer::{InferenceResult, QueryOptions};
use cbench_core::learn::ModelDocument;

use crate::error::{ApiError, ApiResult};
use crate::pipeline::marginals;

pub const BUNDLE_FORMAT: &str = "cbench-dashboard";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub title: String,
    pub nodes: Vec<String>,
    pub arcs: usize,
    pub files: Vec<String>,
}

const VIEWER: &str = include_str!("viewer.html");

/// Posterior queries run by the page; also usable from Node.
pub const VIEWER_SCRIPT: &str = include_str!("viewer.js");

fn append(builder: &mut tar::Builder<Vec<u8>>, name: &str, bytes: &[u8]) -> std::io::Result<()> {
    let mut header = tar::Header::new_gnu();
    header.set_size(bytes.len() as u64);
    header.set_mode(0o644);
    header.set_mtime(0);
    header.set_cksum();
    builder.append_data(&mut header, name, bytes)
}

/// Builds the archive. The document must carry a fitted network.
pub fn build_bundle(title: &str, doc: &ModelDocument) -> ApiResult<Vec<u8>> {
    let bn = doc
        .fitted
        .as_ref()
        .ok_or_else(|| ApiError::precondition("fit before publishing"))?;
    let margins: BTreeMap<String, InferenceResult> = marginals(bn, &QueryOptions::default())?;
    let model_json = serde_json::to_vec_pretty(doc)?;
    let marginals_json = serde_json::to_vec_pretty(&margins)?;
    let embedded = json!({ "model": doc, "marginals": margins }).to_string().replace("</", "<\\/");
    let index = fill(
        VIEWER,
        &[
            ("__TITLE__", &escape_html(title)),
            ("__SCRIPT__", VIEWER_SCRIPT),
            ("__DATA__", &embedded),
        ],
    );
    let files = ["manifest.json", "model.json", "marginals.json", "index.html"];
    let manifest = Manifest {
        format: BUNDLE_FORMAT.to_string(),
        version: BUNDLE_VERSION,
        title: title.to_string(),
        nodes: doc.dag.nodes().to_vec(),
        arcs: doc.dag.n_arcs(),
        files: files.iter().map(|f| f.to_string()).collect(),
    };
    let io = |e: std::io::Error| ApiError::internal(format!("cannot write bundle: {e}"));
    let mut builder = tar::Builder::new(Vec::new());
    append(&mut builder, files[0], &serde_json::to_vec_pretty(&manifest)?).map_err(io)?;
    append(&mut builder, files[1], &model_json).map_err(io)?;
    append(&mut builder, files[2], &marginals_json).map_err(io)?;
    append(&mut builder, files[3], index.as_bytes()).map_err(io)?;
    builder.into_inner().map_err(io)
}

/// Substitutes placeholders in one pass, so inserted text is never rescanned.
fn fill(template: &str, subs: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some((at, key, value)) = subs
        .iter()
        .filter_map(|(k, v)| rest.find(k).map(|i| (i, *k, *v)))
        .min_by_key(|t| t.0)
    {
        out.push_str(&rest[..at]);
        out.push_str(value);
        rest = &rest[at + key.len()..];
    }
    out.push_str(rest);
    out
}

fn escape_html(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Reads the named entries back out of an archive.
pub fn read_bundle(bytes: &[u8]) -> std::io::Result<BTreeMap<String, Vec<u8>>> {
    use std::io::Read;
    let mut archive = tar::Archive::new(bytes);
    let mut out = BTreeMap::new();
    for entry in archive.entries()? {
        let mut entry = entry?;
        let name = entry.path()?.to_string_lossy().into_owned();
        let mut buf = Vec::new();
        entry.read_to_end(&mut buf)?;
        out.insert(name, buf);
    }
    Ok(out)
}
