//! Real-device backend that shells out to `adb`.

use std::process::Command;
use std::time::Duration;

use tracing::debug;

use super::backend::{DeviceBackend, Gesture, HierarchyDump};
use super::hierarchy::parse_hierarchy;
use super::DeviceError;

const DUMP_PATH: &str = "/sdcard/window_dump.xml";

#[derive(Debug, Clone)]
pub struct AdbBackend {
    serial: String,
    adb: String,
}

impl AdbBackend {
    pub fn new(serial: impl Into<String>) -> Self {
        Self {
            serial: serial.into(),
            adb: std::env::var("ADB").unwrap_or_else(|_| "adb".to_string()),
        }
    }

    fn run(&self, args: &[&str]) -> Result<Vec<u8>, DeviceError> {
        debug!(serial = %self.serial, ?args, "adb");
        let out = Command::new(&self.adb)
            .arg("-s")
            .arg(&self.serial)
            .args(args)
            .output()
            .map_err(|e| {
                DeviceError::BackendUnavailable(format!("cannot run {}: {e}", self.adb))
            })?;
        if !out.status.success() {
            return Err(DeviceError::BackendUnavailable(format!(
                "adb {} failed: {}",
                args.join(" "),
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        Ok(out.stdout)
    }

    fn shell(&self, args: &[&str]) -> Result<String, DeviceError> {
        let mut full = vec!["shell"];
        full.extend_from_slice(args);
        Ok(String::from_utf8_lossy(&self.run(&full)?).into_owned())
    }
}

/// Escapes text for `input text`: spaces become `%s` and shell
/// metacharacters are backslash-escaped.
pub fn escape_input_text(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            ' ' => out.push_str("%s"),
            '\\' | '"' | '\'' | '`' | '$' | '&' | '|' | ';' | '<' | '>' | '(' | ')' | '*' | '?'
            | '~' | '#' | '%' => {
                out.push('\\');
                out.push(c);
            }
            _ => out.push(c),
        }
    }
    out
}

/// Package name from a `dumpsys window` focus line such as
/// `mCurrentFocus=Window{1a2b u0 com.example/com.example.Main}`.
pub fn parse_focus_package(dumpsys: &str) -> Option<String> {
    let line = dumpsys
        .lines()
        .find(|l| l.contains("mCurrentFocus") || l.contains("mFocusedApp"))?;
    let component = line.split_whitespace().find(|t| t.contains('/'))?;
    Some(
        component
            .split('/')
            .next()?
            .trim_matches(|c| c == '{' || c == '}')
            .to_string(),
    )
}

impl DeviceBackend for AdbBackend {
    fn dump_hierarchy(&mut self) -> Result<HierarchyDump, DeviceError> {
        self.shell(&["uiautomator", "dump", DUMP_PATH])?;
        let raw = String::from_utf8_lossy(&self.run(&["exec-out", "cat", DUMP_PATH])?).into_owned();
        let start = raw
            .find('<')
            .ok_or_else(|| DeviceError::MalformedDump("no XML in dump output".into()))?;
        let raw = raw[start..].to_string();
        Ok(HierarchyDump {
            widgets: parse_hierarchy(&raw)?,
            raw,
        })
    }

    fn screenshot(&mut self) -> Result<Option<Vec<u8>>, DeviceError> {
        Ok(Some(self.run(&["exec-out", "screencap", "-p"])?))
    }

    fn perform(&mut self, gesture: &Gesture) -> Result<(), DeviceError> {
        match gesture {
            Gesture::Tap { x, y } => {
                self.shell(&["input", "tap", &x.to_string(), &y.to_string()])?;
            }
            Gesture::Input { x, y, text } => {
                self.shell(&["input", "tap", &x.to_string(), &y.to_string()])?;
                self.shell(&["input", "text", &escape_input_text(text)])?;
            }
            Gesture::Swipe {
                from,
                to,
                duration_ms,
            } => {
                self.shell(&[
                    "input",
                    "swipe",
                    &from.0.to_string(),
                    &from.1.to_string(),
                    &to.0.to_string(),
                    &to.1.to_string(),
                    &duration_ms.to_string(),
                ])?;
            }
            Gesture::Back => {
                self.shell(&["input", "keyevent", "KEYCODE_BACK"])?;
            }
        }
        Ok(())
    }

    fn current_app(&mut self) -> Result<String, DeviceError> {
        let out = self.shell(&["dumpsys", "window"])?;
        parse_focus_package(&out)
            .ok_or_else(|| DeviceError::BackendUnavailable("no focused window".into()))
    }

    fn settle_delay(&self) -> Duration {
        Duration::from_millis(500)
    }

    fn empty_retry_delay(&self) -> Duration {
        Duration::from_secs(1)
    }
}
