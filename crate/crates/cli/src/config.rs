//! `--config` files: one `key = value` per line, `#` starts a comment. Keys
//! are long flag names without the dashes. A key is applied only when the
//! command line does not set the same flag, so explicit flags always win.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, Command as ClapCommand};
use flowlens::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
}

pub fn parse_config(text: &str) -> Result<Vec<Entry>> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidParam(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(Error::InvalidParam(format!("config line {}: empty key", i + 1)));
        }
        entries.push(Entry { key, value: value.trim().to_string() });
    }
    Ok(entries)
}

fn is_flag(action: &ArgAction) -> bool {
    matches!(action, ArgAction::SetTrue | ArgAction::SetFalse | ArgAction::Count)
}

/// Rewrites `argv` with config entries for `subcommand` spliced in right
/// after the subcommand name.
pub fn expand_args(cmd: &ClapCommand, argv: &[OsString], subcommand: &str, entries: &[Entry]) -> Result<Vec<OsString>> {
    let sub = cmd
        .find_subcommand(subcommand)
        .ok_or_else(|| Error::InvalidParam(format!("unknown command '{subcommand}'")))?;
    let pos = argv
        .iter()
        .position(|a| a.to_str() == Some(subcommand))
        .ok_or_else(|| Error::InvalidParam(format!("command '{subcommand}' not found in arguments")))?;
    let given = |long: &str| {
        let flag = format!("--{long}");
        let prefix = format!("--{long}=");
        argv.iter().skip(1).filter_map(|a| a.to_str()).any(|a| a == flag || a.starts_with(&prefix))
    };

    let mut injected: Vec<OsString> = Vec::new();
    for e in entries {
        if e.key == "config" {
            return Err(Error::InvalidParam("config files cannot include other config files".into()));
        }
        let arg = sub.get_arguments().chain(cmd.get_arguments()).find(|a| a.get_long() == Some(e.key.as_str()));
        let Some(arg) = arg else {
            let elsewhere = cmd
                .get_subcommands()
                .any(|s| s.get_arguments().any(|a| a.get_long() == Some(e.key.as_str())));
            if elsewhere {
                continue;
            }
            return Err(Error::InvalidParam(format!("config key '{}' is not a flag of any command", e.key)));
        };
        if given(&e.key) {
            continue;
        }
        if is_flag(arg.get_action()) {
            match e.value.as_str() {
                "true" | "yes" | "1" => injected.push(format!("--{}", e.key).into()),
                "false" | "no" | "0" => {}
                v => return Err(Error::InvalidParam(format!("config key '{}': '{v}' is not a boolean", e.key))),
            }
        } else {
            injected.push(format!("--{}={}", e.key, e.value).into());
        }
    }
    let mut out = argv[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

pub fn load_config(path: &Path) -> Result<Vec<Entry>> {
    parse_config(&std::fs::read_to_string(path)?)
}
