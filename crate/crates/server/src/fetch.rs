use std::sync::OnceLock;
use std::time::Duration;

use tsvis_core::ingest::{Fetcher, FileFetcher};
use tsvis_core::{Error, Result};

/// Fetches `http(s)://` locations over the network and everything else from
/// the filesystem.
///
/// The blocking client is built on first use. Polls run on blocking worker
/// threads, never on the async runtime itself.
#[derive(Debug, Default)]
pub struct SourceFetcher {
    files: FileFetcher,
    client: OnceLock<reqwest::blocking::Client>,
    timeout: Option<Duration>,
}

impl SourceFetcher {
    pub fn new(files: FileFetcher, timeout: Duration) -> Self {
        SourceFetcher {
            files,
            client: OnceLock::new(),
            timeout: Some(timeout),
        }
    }

    fn client(&self) -> Result<&reqwest::blocking::Client> {
        if let Some(c) = self.client.get() {
            return Ok(c);
        }
        let built = reqwest::blocking::Client::builder()
            .timeout(self.timeout.unwrap_or(Duration::from_secs(30)))
            .build()
            .map_err(|e| Error::FetchFailure(format!("http client: {e}")))?;
        Ok(self.client.get_or_init(|| built))
    }
}

fn is_http(location: &str) -> bool {
    let lower = location.get(..8).unwrap_or(location).to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://")
}

impl Fetcher for SourceFetcher {
    fn fetch(&self, location: &str) -> Result<Vec<u8>> {
        if !is_http(location) {
            return self.files.fetch(location);
        }
        let response = self
            .client()?
            .get(location)
            .send()
            .map_err(|e| Error::FetchFailure(format!("{location}: {e}")))?;
        let status = response.status();
        if !status.is_success() {
            return Err(Error::FetchFailure(format!("{location}: HTTP {status}")));
        }
        let body = response
            .bytes()
            .map_err(|e| Error::FetchFailure(format!("{location}: {e}")))?;
        Ok(body.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_detection() {
        assert!(is_http("http://x/y.csv"));
        assert!(is_http("HTTPS://x"));
        assert!(!is_http("file:///tmp/a.csv"));
        assert!(!is_http("data/http.csv"));
        assert!(!is_http("ht"));
    }

    #[test]
    fn files_go_through_the_file_fetcher() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "date,value\n").unwrap();
        let f = SourceFetcher::new(FileFetcher { root: Some(dir.path().into()) }, Duration::from_secs(1));
        assert_eq!(f.fetch("a.csv").unwrap(), b"date,value\n");
        assert!(matches!(f.fetch("missing.csv"), Err(Error::FetchFailure(_))));
    }
}
