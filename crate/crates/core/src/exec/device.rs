//! Device command channel.
//!
//! Commands are newline-delimited JSON objects
//! `{device, command, params, correlation_id}`; each is answered by one ack
//! line `{correlation_id, status, detail}`. The in-process stub acknowledges
//! synchronously and keeps a log.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{ActionContext, ExecError, ExecutionResult, Executor};
use crate::workflow::ActionSpec;

pub const DEFAULT_DEVICE: &str = "cobot";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceCommand {
    pub device: String,
    pub command: String,
    #[serde(default)]
    pub params: BTreeMap<String, Value>,
    pub correlation_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceAck {
    pub correlation_id: String,
    pub status: String,
    #[serde(default)]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeviceError {
    #[error("device channel unavailable: {0}")]
    ChannelUnavailable(String),
    #[error("device did not acknowledge within {0} ms")]
    Timeout(u64),
    #[error("correlation id `{0}` already used")]
    DuplicateCorrelation(String),
    #[error("malformed ack: {0}")]
    BadAck(String),
}

pub trait DeviceTransport: Send + Sync {
    fn deliver(&self, cmd: &DeviceCommand, timeout: Duration) -> Result<DeviceAck, DeviceError>;
}

/// Records commands and acknowledges each with `ok`.
#[derive(Debug, Default)]
pub struct StubTransport {
    log: Mutex<Vec<DeviceCommand>>,
}

impl StubTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn log(&self) -> Vec<DeviceCommand> {
        self.log.lock().unwrap().clone()
    }
}

impl DeviceTransport for StubTransport {
    fn deliver(&self, cmd: &DeviceCommand, _timeout: Duration) -> Result<DeviceAck, DeviceError> {
        self.log.lock().unwrap().push(cmd.clone());
        Ok(DeviceAck {
            correlation_id: cmd.correlation_id.clone(),
            status: "ok".into(),
            detail: String::new(),
        })
    }
}

struct Conn {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

/// One persistent TCP connection, reopened after any error. Sends are
/// serialized, so acks come back in command order.
pub struct TcpTransport {
    addr: String,
    conn: Mutex<Option<Conn>>,
}

impl TcpTransport {
    pub fn new(addr: impl Into<String>) -> Self {
        Self {
            addr: addr.into(),
            conn: Mutex::new(None),
        }
    }

    fn connect(&self, timeout: Duration) -> Result<Conn, DeviceError> {
        let addrs: Vec<SocketAddr> = self
            .addr
            .to_socket_addrs()
            .map_err(|e| DeviceError::ChannelUnavailable(format!("{}: {e}", self.addr)))?
            .collect();
        let mut last = format!("{}: no address", self.addr);
        for a in addrs {
            match TcpStream::connect_timeout(&a, timeout) {
                Ok(s) => {
                    let writer = s.try_clone().map_err(|e| DeviceError::ChannelUnavailable(e.to_string()))?;
                    return Ok(Conn {
                        reader: BufReader::new(s),
                        writer,
                    });
                }
                Err(e) => last = format!("{a}: {e}"),
            }
        }
        Err(DeviceError::ChannelUnavailable(last))
    }

    fn exchange(conn: &mut Conn, cmd: &DeviceCommand, timeout: Duration) -> Result<DeviceAck, DeviceError> {
        let io = |e: std::io::Error| DeviceError::ChannelUnavailable(e.to_string());
        let mut line = serde_json::to_string(cmd).map_err(|e| DeviceError::BadAck(e.to_string()))?;
        line.push('\n');
        conn.writer.write_all(line.as_bytes()).map_err(io)?;
        conn.writer.flush().map_err(io)?;
        conn.reader.get_ref().set_read_timeout(Some(timeout)).map_err(io)?;
        let mut buf = String::new();
        match conn.reader.read_line(&mut buf) {
            Ok(0) => Err(DeviceError::ChannelUnavailable("connection closed".into())),
            Ok(_) => {
                let ack: DeviceAck =
                    serde_json::from_str(buf.trim_end()).map_err(|e| DeviceError::BadAck(e.to_string()))?;
                if ack.correlation_id != cmd.correlation_id {
                    return Err(DeviceError::BadAck(format!(
                        "ack for `{}` while waiting for `{}`",
                        ack.correlation_id, cmd.correlation_id
                    )));
                }
                Ok(ack)
            }
            Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {
                Err(DeviceError::Timeout(timeout.as_millis() as u64))
            }
            Err(e) => Err(io(e)),
        }
    }
}

impl DeviceTransport for TcpTransport {
    fn deliver(&self, cmd: &DeviceCommand, timeout: Duration) -> Result<DeviceAck, DeviceError> {
        let mut guard = self.conn.lock().unwrap();
        if guard.is_none() {
            *guard = Some(self.connect(timeout)?);
        }
        let result = Self::exchange(guard.as_mut().expect("connected"), cmd, timeout);
        if result.is_err() {
            *guard = None;
        }
        result
    }
}

/// A transport plus the set of correlation ids it has already carried.
pub struct DeviceGateway {
    transport: Arc<dyn DeviceTransport>,
    seen: Mutex<HashSet<String>>,
}

impl DeviceGateway {
    pub fn new(transport: Arc<dyn DeviceTransport>) -> Self {
        Self {
            transport,
            seen: Mutex::new(HashSet::new()),
        }
    }
}

/// Delivers `cmd` and maps the ack onto an execution result. Duplicate
/// correlation ids are refused before anything is sent.
pub fn send_device_command(
    gateway: &DeviceGateway,
    cmd: &DeviceCommand,
    timeout: Duration,
) -> Result<ExecutionResult, DeviceError> {
    if !gateway.seen.lock().unwrap().insert(cmd.correlation_id.clone()) {
        return Err(DeviceError::DuplicateCorrelation(cmd.correlation_id.clone()));
    }
    let ack = gateway.transport.deliver(cmd, timeout)?;
    let feedback = if ack.detail.is_empty() {
        format!("{} {}: {}", cmd.device, cmd.command, ack.status)
    } else {
        format!("{} {}: {} ({})", cmd.device, cmd.command, ack.status, ack.detail)
    };
    Ok(if ack.status == "ok" {
        ExecutionResult::ok(feedback)
    } else {
        ExecutionResult::failed(feedback)
    })
}

/// Runs `device` actions: `target` is the command, the `device` param names
/// the device (default `cobot`), remaining params are passed through.
pub struct DeviceExecutor {
    gateway: Arc<DeviceGateway>,
    counter: AtomicU64,
}

impl DeviceExecutor {
    pub fn new(gateway: Arc<DeviceGateway>) -> Self {
        Self {
            gateway,
            counter: AtomicU64::new(0),
        }
    }
}

impl Executor for DeviceExecutor {
    fn execute(&self, action: &ActionSpec, ctx: &ActionContext<'_>) -> Result<ExecutionResult, ExecError> {
        let n = self.counter.fetch_add(1, Ordering::SeqCst) + 1;
        let mut params = action.params.clone();
        let device = params
            .remove("device")
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_else(|| DEFAULT_DEVICE.to_string());
        let cmd = DeviceCommand {
            device,
            command: action.target.clone(),
            params,
            correlation_id: format!("{}-{n}", ctx.session_id),
        };
        match send_device_command(&self.gateway, &cmd, Duration::from_millis(ctx.timeout_ms)) {
            Ok(r) => Ok(r),
            Err(DeviceError::Timeout(ms)) => Err(ExecError::Timeout(ms)),
            Err(e) => Err(ExecError::Failed(e.to_string())),
        }
    }
}
