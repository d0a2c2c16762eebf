#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use artctx_core::config::AppConfig;
use artctx_core::construct::{build_ackg, BuildConfig, CorpusManifest, GRAPH_FILE};
use artctx_core::gateway::{Gateway, MockScript};
use artctx_core::index::{build_index, IndexConfig};

pub fn demo() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/demo")
}

pub const SUMMER_ATTRS: [(&str, &str); 5] = [
    ("title", "Summer"),
    ("artist", "Abel Grimmer"),
    ("technique", "Oil on panel"),
    ("timeframe", "1601-1650"),
    ("school", "Flemish"),
];

/// Built demo graph and index plus a config file pointing at them.
pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let gw = Gateway::mock(MockScript::from_file(&demo().join("fixtures.json")).unwrap());
        let manifest = CorpusManifest::load(&demo().join("manifest.json")).unwrap();
        let cfg = BuildConfig {
            output_dir: Some(dir.path().to_path_buf()),
            ..Default::default()
        };
        let graph = build_ackg(&gw, &manifest, &cfg).unwrap().graph;
        build_index(&gw, &graph, &IndexConfig::default())
            .unwrap()
            .save(&dir.path().join("index.bin"))
            .unwrap();
        let config = format!(
            "[gateway]\nbackend = \"mock\"\nmock_fixtures = {:?}\n\n[paths]\ngraph = {:?}\nindex = {:?}\n",
            demo().join("fixtures.json"),
            dir.path().join(GRAPH_FILE),
            dir.path().join("index.bin"),
        );
        std::fs::write(dir.path().join("artctx.toml"), config).unwrap();
        Workspace { dir }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn config_path(&self) -> PathBuf {
        self.path("artctx.toml")
    }

    pub fn config(&self) -> AppConfig {
        AppConfig::load(&self.config_path()).unwrap()
    }
}

/// Runs the binary with `ARTCTX_*` variables cleared.
pub fn artctx(args: &[&str], cwd: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_artctx"));
    for (k, _) in std::env::vars() {
        if k.starts_with("ARTCTX_") {
            cmd.env_remove(k);
        }
    }
    cmd.args(args).current_dir(cwd).output().unwrap()
}

pub fn summer_flags() -> Vec<String> {
    let mut v = vec!["--image".to_owned(), demo().join("summer.png").display().to_string()];
    for (k, val) in SUMMER_ATTRS {
        v.push(format!("--{k}"));
        v.push(val.to_owned());
    }
    v
}
