//! Stand-in renderer for tests: writes a fixed one-pixel PNG, or fails when
//! the HTML contains a marker.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use crate::error::CliError;
use crate::Outcome;

const PIXEL_PNG: [u8; 69] = [
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00, 0x00,
    0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x02, 0x00, 0x00, 0x00, 0x90, 0x77, 0x53, 0xde, 0x00, 0x00, 0x00,
    0x0c, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0xf8, 0xff, 0xff, 0x3f, 0x00, 0x05, 0xfe, 0x02, 0xfe, 0x0d,
    0xef, 0x46, 0xb8, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82,
];

#[derive(Debug, Args)]
pub struct MockRenderArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[arg(long, default_value = "MOCK-RENDER-FAIL")]
    pub fail_marker: String,
}

pub fn run(args: &MockRenderArgs) -> Result<Outcome, CliError> {
    let html = fs::read_to_string(&args.input).map_err(CliError::io)?;
    if html.contains(&args.fail_marker) {
        return Err(CliError::data(format!("{} contains {}", args.input.display(), args.fail_marker)));
    }
    fs::write(&args.output, PIXEL_PNG).map_err(CliError::io)?;
    Ok(Outcome::ok(json!({ "ok": true }), String::new()))
}
