use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LogLevel {
    Info,
    Warn,
    Error,
}

impl fmt::Display for LogLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogLevel::Info => "INFO",
            LogLevel::Warn => "WARN",
            LogLevel::Error => "ERROR",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    /// Local time, RFC 3339.
    pub timestamp: String,
    pub level: LogLevel,
    pub message: String,
}

/// Ordered log of one file (or of the whole run).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProcessLog {
    pub entries: Vec<LogEntry>,
}

impl ProcessLog {
    pub fn push(&mut self, level: LogLevel, message: impl Into<String>) {
        let timestamp = chrono::Local::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, false);
        self.entries.push(LogEntry { timestamp, level, message: message.into() });
    }

    pub fn info(&mut self, message: impl Into<String>) {
        self.push(LogLevel::Info, message);
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.push(LogLevel::Warn, message);
    }

    pub fn error(&mut self, message: impl Into<String>) {
        self.push(LogLevel::Error, message);
    }

    pub fn count(&self, level: LogLevel) -> usize {
        self.entries.iter().filter(|e| e.level == level).count()
    }

    pub fn messages(&self, level: LogLevel) -> impl Iterator<Item = &str> {
        self.entries.iter().filter(move |e| e.level == level).map(|e| e.message.as_str())
    }
}

impl fmt::Display for ProcessLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{} [{}] {}", e.timestamp, e.level, e.message)?;
        }
        Ok(())
    }
}
