mod common;

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::time::Duration;

use freqlens::embedder::wire::{decode_f32s, Handshake, Request, Response, PROTOCOL_VERSION};
use freqlens::embedder::{batch_embed, Embedder, SubprocessEmbedder};

fn echo(dim: usize, window: usize, seed: u64) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_freqlens"));
    cmd.args(["echo-embedder", "--dim", &dim.to_string(), "--window", &window.to_string()])
        .args(["--shuffle-seed", &seed.to_string()]);
    cmd
}

/// Expected echo embedding: the leading pixels after the f32 wire rounding.
fn prefix(img: &freqlens::SpatialImage, dim: usize) -> Vec<f64> {
    img.pixels()[..dim].iter().map(|&x| f64::from(x as f32)).collect()
}

#[test]
fn raw_child_handshakes_first_and_shuffles_responses() {
    let mut child = echo(8, 100, 11).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn().unwrap();
    let mut stdin = child.stdin.take().unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();

    let hs: Handshake = serde_json::from_str(&lines.next().unwrap().unwrap()).unwrap();
    assert_eq!((hs.protocol, hs.dim), (PROTOCOL_VERSION, 8));

    let mut rng = common::Rng::new(2);
    let images: Vec<_> = (0..100).map(|_| rng.image(16, 16, 3)).collect();
    for (i, img) in images.iter().enumerate() {
        serde_json::to_writer(&mut stdin, &Request::for_image(i as u64, img)).unwrap();
        stdin.write_all(b"\n").unwrap();
    }
    stdin.flush().unwrap();

    let mut ids = Vec::new();
    for _ in 0..100 {
        let r: Response = serde_json::from_str(&lines.next().unwrap().unwrap()).unwrap();
        let Response::Embedding { id, embedding } = r else { panic!("error response") };
        let got: Vec<f64> = decode_f32s(&embedding).unwrap().into_iter().map(f64::from).collect();
        assert_eq!(got, prefix(&images[id as usize], 8));
        ids.push(id);
    }
    drop(stdin);
    assert!(child.wait().unwrap().success());
    assert_ne!(ids, (0..100).collect::<Vec<_>>(), "responses were not reordered");
    ids.sort_unstable();
    assert_eq!(ids, (0..100).collect::<Vec<_>>());
}

#[test]
fn host_matches_out_of_order_responses_by_id() {
    let backend = SubprocessEmbedder::spawn(echo(32, 16, 5), Duration::from_secs(30)).unwrap();
    assert_eq!(backend.dim(), 32);
    let mut rng = common::Rng::new(3);
    let images: Vec<_> = (0..100).map(|_| rng.image(112, 112, 3)).collect();
    let out = batch_embed(&backend, &images).unwrap();
    for (img, e) in images.iter().zip(&out) {
        assert_eq!(e.values(), prefix(img, 32).as_slice());
    }
    // The connection stays usable and repeatable.
    let again = backend.embed_batch(&images[..3]).unwrap();
    assert_eq!(again, out[..3].to_vec());
    assert!(batch_embed(&backend, &[]).unwrap().is_empty());
}

#[test]
fn command_line_form_is_parsed() {
    let line = format!("'{}' echo-embedder --dim 4", env!("CARGO_BIN_EXE_freqlens"));
    let backend = SubprocessEmbedder::spawn_command_line(&line, Duration::from_secs(30)).unwrap();
    let img = common::Rng::new(4).image(8, 8, 1);
    assert_eq!(backend.embed(&img).unwrap().values(), prefix(&img, 4).as_slice());
}
