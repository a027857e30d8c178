//! Line-protocol TCP server. One client at a time; every connection gets a
//! fresh session built from the same domain and knowledge base.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};

use cuebot_core::session::Session;
use cuebot_core::skill::KnowledgeBase;

use crate::domain::Domain;
use crate::protocol::{encode, is_filler, Decoder};
use crate::script::new_session;

/// Drives one session over any line stream. Malformed lines are answered
/// with an error message and the stream stays open. Returns the session as
/// it was when the peer hung up.
pub fn drive<R: BufRead, W: Write>(mut session: Session, reader: R, mut writer: W) -> io::Result<Session> {
    let mut dec = Decoder::new();
    for line in reader.lines() {
        let line = line?;
        if is_filler(&line) {
            continue;
        }
        let out = match dec.decode(&line) {
            Ok(m) => session.handle(&m),
            Err(e) => vec![session.reject_line(e.code(), &e.to_string())],
        };
        for o in &out {
            writer.write_all(encode(o).as_bytes())?;
            writer.write_all(b"\n")?;
        }
        writer.flush()?;
    }
    Ok(session)
}

pub struct Server {
    listener: TcpListener,
    domain: Domain,
    seed: u64,
    kb: Option<KnowledgeBase>,
}

impl Server {
    pub fn bind(addr: &str, domain: Domain, seed: u64, kb: Option<KnowledgeBase>) -> io::Result<Self> {
        Ok(Server {
            listener: TcpListener::bind(addr)?,
            domain,
            seed,
            kb,
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    fn serve_one(&self, stream: TcpStream) -> io::Result<Session> {
        let reader = BufReader::new(stream.try_clone()?);
        drive(new_session(&self.domain, self.seed, self.kb.clone()), reader, stream)
    }

    /// Serves `limit` connections, or forever when `None`. A client that
    /// drops mid-line only ends its own connection.
    pub fn run(&self, limit: Option<usize>) -> io::Result<()> {
        let mut served = 0;
        for stream in self.listener.incoming() {
            let stream = stream?;
            let peer = stream.peer_addr().ok();
            if let Err(e) = self.serve_one(stream) {
                eprintln!("connection {peer:?}: {e}");
            }
            served += 1;
            if limit.is_some_and(|l| served >= l) {
                break;
            }
        }
        Ok(())
    }
}
