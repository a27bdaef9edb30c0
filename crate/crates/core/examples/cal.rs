use scanlab::eval::evaluate;
use scanlab::model::{ModelConfig, Trainer};
use scanlab::token::read_samples;
use std::path::Path;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    // cal TRAIN TEST dropout lr batch chunk n_chunks [embed enc dec attn]
    let train_set = read_samples(Path::new(&args[1])).unwrap();
    let test_set = read_samples(Path::new(&args[2])).unwrap();
    let mut cfg = ModelConfig::desk_default();
    cfg.dropout_rate = args[3].parse().unwrap();
    cfg.learning_rate = args[4].parse().unwrap();
    cfg.batch_size = args[5].parse().unwrap();
    let chunk: usize = args[6].parse().unwrap();
    let n_chunks: usize = args[7].parse().unwrap();
    if args.len() > 8 {
        cfg.embed_dim = args[8].parse().unwrap();
        cfg.enc_hidden_per_dir = args[9].parse().unwrap();
        cfg.dec_hidden = args[10].parse().unwrap();
        cfg.attn_dim = args[11].parse().unwrap();
    }
    if args.len() > 12 {
        cfg.embed_lr_mult = args[12].parse().unwrap();
    }
    cfg.teacher_forcing_rate = 1.0;
    cfg.seed = 11;
    cfg.max_epochs = chunk;
    eprintln!("config: {cfg:?}");
    let max_len = 2 * train_set.iter().map(|s| s.target.len()).max().unwrap() + 2;
    let mut trainer = Trainer::<f32>::new(cfg, &train_set).unwrap();
    let t0 = Instant::now();
    for c in 0..n_chunks {
        let hist = trainer.fit(&train_set, |_| {}).unwrap();
        let last = hist.last().unwrap();
        let r = evaluate(&trainer, &test_set, max_len);
        eprintln!(
            "[{:7.1}s] epoch {:3} loss {:.4} | test seq {:.4} token {:.4}",
            t0.elapsed().as_secs_f32(),
            (c + 1) * chunk,
            last.loss,
            r.seq_acc,
            r.token_acc
        );
    }
}
