//! Start the line-protocol service in-process, stream a simulated session to
//! it and print what comes back.

use std::io::{BufRead, BufReader, Write};
use std::net::{Shutdown, TcpStream};

use gazecue::config::AppConfig;
use gazecue::server::Server;
use gazecue::sessionio::SampleRecord;
use gazecue::simulator::{generate_session, BehaviorProfile};

fn main() -> anyhow::Result<()> {
    let mut config = AppConfig::default();
    config.service.port = 0;
    config.service.heartbeat_ms = 200;
    let (samples, _) = generate_session(
        &BehaviorProfile { seed: 5, ..Default::default() },
        &config.calibration,
        &config.layout,
        3,
    )?;
    let server = Server::bind(config)?.spawn()?;
    println!("service on {}", server.local_addr());

    let mut stream = TcpStream::connect(server.local_addr())?;
    let reader = BufReader::new(stream.try_clone()?);
    for s in &samples {
        let mut line = serde_json::to_string(&SampleRecord::from_sample(s))?;
        line.push('\n');
        stream.write_all(line.as_bytes())?;
    }
    stream.write_all(b"this is not json\n")?;
    // Nothing more to send; the server drains the queue and closes.
    stream.shutdown(Shutdown::Write)?;

    for line in reader.lines() {
        println!("{}", line?);
    }
    server.stop()?;
    Ok(())
}
