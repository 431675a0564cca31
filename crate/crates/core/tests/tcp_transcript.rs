use std::net::{SocketAddr, TcpListener};
use std::thread;
use std::time::Duration;

use synthmpc::pipeline::cohort::{desk_cohort, split_holders, DeskCohortSpec};
use synthmpc::pipeline::run::{run_servers_local, serve_party, submit_holders};
use synthmpc::protocols::ProtocolParams;
use synthmpc::{FixedPointCodec, Party, PartyId};

fn free_endpoints() -> [SocketAddr; 3] {
    let listeners: Vec<TcpListener> = (0..3).map(|_| TcpListener::bind("127.0.0.1:0").unwrap()).collect();
    let addrs: Vec<SocketAddr> = listeners.iter().map(|l| l.local_addr().unwrap()).collect();
    addrs.try_into().unwrap()
}

#[test]
fn tcp_run_matches_local_run_byte_for_byte() {
    let cohort = desk_cohort(&DeskCohortSpec::new(48, 4, 3, 5)).unwrap();
    let parts = split_holders(&cohort, 2, 1).unwrap();
    let subs = submit_holders(&parts, FixedPointCodec::default(), 2).unwrap();
    let params = ProtocolParams {
        classes: 3,
        sigma: 1.5,
        noise_bin_means: true,
        dp_mode: true,
    };
    let session = 77;
    let timeout = Duration::from_secs(30);
    let local = run_servers_local(&subs, &params, session, timeout).unwrap();

    let endpoints = free_endpoints();
    let handles: Vec<_> = PartyId::ALL
        .into_iter()
        .map(|me| {
            let inputs = subs[me.index()].clone();
            thread::spawn(move || {
                let seed = Party::derive_seed_material(session, me);
                serve_party(me, endpoints, &inputs, &params, seed, timeout)
            })
        })
        .collect();
    let remote: Vec<_> = handles.into_iter().map(|h| h.join().unwrap().unwrap()).collect();

    assert_eq!(remote[0].release.as_ref(), Some(&local.release));
    assert!(remote[1].release.is_none() && remote[2].release.is_none());
    for (r, (t, s)) in remote.iter().zip(local.transcripts.iter().zip(&local.stats)) {
        assert_eq!(&r.transcript, t);
        assert_eq!(&r.stats, s);
    }
}
