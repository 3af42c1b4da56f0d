//! The `np` command line tool: mint content-addressed identifiers, publish,
//! check hosting status, build indexes, and fetch nanopublications.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use nanomesh::config::normalize_server_url;
use nanomesh::index::{self, IndexNode};
use nanomesh::rdf::{self, Format, Iri, Nanopub};
use nanomesh::trusty::{self, ArtifactCode};

use crate::client::{artifact_url, code_from_argument, ServerClient};

#[derive(Parser)]
#[command(name = "np", version, about = "Work with nanopublications and their servers")]
struct Cli {
    /// Server URL; repeat for fallbacks. Overrides --servers and the environment.
    #[arg(long = "server", global = true, value_name = "URL")]
    server: Vec<String>,

    /// File listing one server URL per line.
    #[arg(long = "servers", global = true, value_name = "FILE")]
    servers: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Give every nanopublication in a file a content-addressed URI.
    Mktrusty {
        /// Print the resulting URI of every nanopublication.
        #[arg(short = 'v')]
        verbose: bool,
        file: PathBuf,
    },
    /// Upload the nanopublications of a file to the first accepting server.
    Publish { file: PathBuf },
    /// List the servers hosting a nanopublication.
    Status {
        /// Also ask the configured servers for their peers and check those.
        #[arg(short = 'a')]
        all: bool,
        /// Artifact code, or any URI ending in one.
        target: String,
    },
    /// Build an index over the nanopublications of one or more files.
    Mkindex {
        /// Index title, recorded in the publication info.
        #[arg(short = 't', long = "title", value_name = "TITLE")]
        title: Option<String>,
        /// Output file; defaults to index.<first input file name>.
        #[arg(short = 'o', long = "out", value_name = "FILE")]
        out: Option<PathBuf>,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Download a nanopublication, or a whole collection with -c.
    Get {
        /// Treat the target as an index and download its members.
        #[arg(short = 'c')]
        content: bool,
        /// Artifact code, or any URI ending in one.
        target: String,
        /// Output file; defaults to <code>.trig.
        #[arg(short = 'o', long = "out", value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Validation(String),
    Network(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Network(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Network(m) => m,
        }
    }
}

/// Runs the tool and returns its exit code. 0 success, 1 usage,
/// 2 validation, 3 network or not found.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return 0;
            }
            eprint!("{err}");
            return 1;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Mktrusty { verbose, ref file } => cmd_mktrusty(file, verbose),
        Command::Publish { ref file } => cmd_publish(&cli, file),
        Command::Status { all, ref target } => cmd_status(&cli, target, all),
        Command::Mkindex {
            ref title,
            ref out,
            ref files,
        } => cmd_mkindex(files, title.as_deref(), out.as_deref()),
        Command::Get {
            content,
            ref target,
            ref out,
        } => cmd_get(&cli, target, content, out.as_deref()),
    }
}

// ---- server list -------------------------------------------------------

fn resolve_servers(cli: &Cli) -> Result<Vec<String>, CliError> {
    let file_contents = match &cli.servers {
        None => None,
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read server list {}: {e}", path.display()))
        })?),
    };
    resolve_servers_from(
        &cli.server,
        file_contents.as_deref(),
        std::env::var("NANOMESH_SERVERS").ok().as_deref(),
    )
}

/// Precedence: --server flags, then --servers file, then NANOMESH_SERVERS
/// (comma separated). The first source that yields anything wins.
fn resolve_servers_from(
    flags: &[String],
    file_contents: Option<&str>,
    env: Option<&str>,
) -> Result<Vec<String>, CliError> {
    let raw: Vec<String> = if !flags.is_empty() {
        flags.to_vec()
    } else if let Some(text) = file_contents {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_owned)
            .collect()
    } else if let Some(env) = env {
        env.split(',')
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_owned)
            .collect()
    } else {
        Vec::new()
    };
    if raw.is_empty() {
        return Err(CliError::Usage(
            "no servers configured; pass --server, --servers, or set NANOMESH_SERVERS".to_owned(),
        ));
    }
    let mut urls = Vec::new();
    for entry in raw {
        let url = normalize_server_url(&entry)
            .map_err(|e| CliError::Usage(format!("bad server URL {entry:?}: {e}")))?;
        if !urls.contains(&url) {
            urls.push(url);
        }
    }
    Ok(urls)
}

fn client_for(url: &str) -> ServerClient {
    ServerClient::with_timeout(url.to_owned(), Duration::from_secs(30))
}

// ---- files and formats -------------------------------------------------

fn format_for(path: &Path) -> Format {
    match path.extension() {
        Some(ext) if ext.eq_ignore_ascii_case("trig") => Format::Grouped,
        _ => Format::LineQuads,
    }
}

fn read_nanopubs(path: &Path) -> Result<Vec<Nanopub>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let quads = rdf::parse(format_for(path), &text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    rdf::split_document(quads)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn write_nanopubs(path: &Path, nanopubs: &[Nanopub]) -> Result<(), CliError> {
    let quads: Vec<_> = nanopubs
        .iter()
        .flat_map(|np| np.quads().iter().cloned())
        .collect();
    let text = rdf::serialize(format_for(path), &quads);
    std::fs::write(path, text)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

fn sibling_with_prefix(input: &Path, prefix: &str) -> PathBuf {
    let name = input
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_owned());
    input.with_file_name(format!("{prefix}{name}"))
}

// ---- mktrusty ----------------------------------------------------------

fn cmd_mktrusty(file: &Path, verbose: bool) -> Result<(), CliError> {
    let nanopubs = read_nanopubs(file)?;
    if nanopubs.is_empty() {
        return Err(CliError::Validation("no nanopublications found".to_owned()));
    }
    let mut transformed = Vec::with_capacity(nanopubs.len());
    for np in &nanopubs {
        let trusty = trusty::make_trusty(np)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        if verbose {
            println!("Nanopub URI: {}", trusty.uri().as_str());
        }
        transformed.push(trusty);
    }
    write_nanopubs(&sibling_with_prefix(file, "trusty."), &transformed)
}

// ---- publish -----------------------------------------------------------

fn cmd_publish(cli: &Cli, file: &Path) -> Result<(), CliError> {
    let nanopubs = read_nanopubs(file)?;
    if nanopubs.is_empty() {
        return Err(CliError::Validation("no nanopublications found".to_owned()));
    }
    for np in &nanopubs {
        match trusty::verify(np) {
            Ok(true) => {}
            Ok(false) => {
                return Err(CliError::Validation(format!(
                    "content does not match its artifact code: {}",
                    np.uri().as_str()
                )));
            }
            Err(e) => return Err(CliError::Validation(e.to_string())),
        }
    }
    let servers = resolve_servers(cli)?;
    for server in &servers {
        let client = client_for(server);
        let mut failed = false;
        for np in &nanopubs {
            if let Err(e) = client.post_nanopub(np) {
                eprintln!("note: {server} refused: {e}");
                failed = true;
                break;
            }
        }
        if !failed {
            let n = nanopubs.len();
            println!(
                "{n} nanopub{} published at {server}",
                if n == 1 { "" } else { "s" }
            );
            return Ok(());
        }
    }
    Err(CliError::Network(
        "no configured server accepted the nanopublications".to_owned(),
    ))
}

// ---- status ------------------------------------------------------------

fn cmd_status(cli: &Cli, target: &str, all: bool) -> Result<(), CliError> {
    let code = code_from_argument(target).ok_or_else(|| {
        CliError::Validation(format!("no artifact code in {target:?}"))
    })?;
    let mut servers = resolve_servers(cli)?;
    if all {
        for server in servers.clone() {
            match client_for(&server).peers() {
                Ok(peers) => {
                    for peer in peers {
                        if !servers.contains(&peer) {
                            servers.push(peer);
                        }
                    }
                }
                Err(e) => eprintln!("note: cannot list peers of {server}: {e}"),
            }
        }
    }
    let mut found = 0usize;
    for server in &servers {
        match client_for(server).get_nanopub_raw(&code, "*/*") {
            Ok((status, _)) if status.is_success() => {
                println!("URL: {}", artifact_url(server, &code));
                found += 1;
            }
            Ok(_) => {}
            Err(e) => eprintln!("note: {server} unreachable: {e}"),
        }
    }
    println!(
        "Found on {found} nanopub server{}.",
        if found == 1 { "" } else { "s" }
    );
    Ok(())
}

// ---- mkindex -----------------------------------------------------------

fn cmd_mkindex(
    files: &[PathBuf],
    title: Option<&str>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut members = Vec::new();
    for file in files {
        members.extend(read_nanopubs(file)?);
    }
    if members.is_empty() {
        return Err(CliError::Validation("no nanopublications found".to_owned()));
    }
    let chain = index::build_index_from_nanopubs(&members, title)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| sibling_with_prefix(&files[0], "index."));
    write_nanopubs(&out, &chain)?;
    let root = chain.last().expect("chain is never empty");
    println!("Index URI: {}", root.uri().as_str());
    Ok(())
}

// ---- get ---------------------------------------------------------------

/// Fetches one nanopublication, trying every server in order. Only content
/// that verifies against `code` is ever returned.
fn fetch_verified(servers: &[String], code: &ArtifactCode) -> Option<Nanopub> {
    for server in servers {
        match client_for(server).get_nanopub(code) {
            Ok(np) => {
                let genuine = trusty::verify(&np).unwrap_or(false)
                    && trusty::extract_code(np.uri().as_str()).as_ref() == Some(code);
                if genuine {
                    return Some(np);
                }
                eprintln!(
                    "note: {server} returned content that does not verify as {}",
                    code.as_str()
                );
            }
            Err(e) if e.is_not_found() => {}
            Err(e) => eprintln!("note: {server}: {e}"),
        }
    }
    None
}

fn cmd_get(
    cli: &Cli,
    target: &str,
    content: bool,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let code = code_from_argument(target).ok_or_else(|| {
        CliError::Validation(format!("no artifact code in {target:?}"))
    })?;
    let servers = resolve_servers(cli)?;
    let np = fetch_verified(&servers, &code).ok_or_else(|| {
        CliError::Network(format!(
            "{} not found on any configured server",
            code.as_str()
        ))
    })?;
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(format!("{}.trig", code.as_str())));

    if !content {
        return write_nanopubs(&out, &[np]);
    }

    if !IndexNode::is_index(&np) {
        return Err(CliError::Validation(format!(
            "not an index: {}",
            np.uri().as_str()
        )));
    }
    let resolved = index::resolve_index(np.uri(), |uri: &Iri| {
        let code = trusty::extract_code(uri.as_str())
            .ok_or_else(|| format!("<{}> carries no artifact code", uri.as_str()))?;
        fetch_verified(&servers, &code)
            .ok_or_else(|| format!("<{}> not found on any configured server", uri.as_str()).into())
    })
    .map_err(|e| CliError::Network(e.to_string()))?;

    let mut fetched = Vec::with_capacity(resolved.members.len());
    for member in &resolved.members {
        let code = trusty::extract_code(member.as_str()).ok_or_else(|| {
            CliError::Validation(format!("member <{}> carries no artifact code", member.as_str()))
        })?;
        let np = fetch_verified(&servers, &code).ok_or_else(|| {
            CliError::Network(format!(
                "member {} not found on any configured server",
                code.as_str()
            ))
        })?;
        fetched.push(np);
    }
    write_nanopubs(&out, &fetched)
}
