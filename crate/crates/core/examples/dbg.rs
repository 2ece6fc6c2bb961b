use guarded_core::comonad::*;
use guarded_core::decomposition::*;
use guarded_core::fixtures::*;
use guarded_core::games::*;
use guarded_core::guards::*;
use guarded_core::openmaps::*;
use guarded_core::Bound;

fn main() {
    let a = path_a();
    let cfg = GameConfig {
        kind: GuardKind::Atom,
        width: Bound::Finite(2),
        rounds: Bound::Finite(2),
        mode: GameMode::Bisimulation,
    };
    let st = winning_strategy(&a, &a, cfg).unwrap();
    let span = build_span(&a, &a, &st).unwrap();
    println!("apex universe: {}", span.apex.structure.universe_len());
    println!("apex valid: {:?}", validate_coalgebra(&span.apex));
    println!("leg_left morphism: {}", is_coalgebra_morphism(&span.leg_left, &span.apex, &span.left_cofree));
    let chains = enumerate_path_embeddings(&span.apex, 4);
    println!("apex chains: {}", chains.len());
    for chain in &chains {
        let image = chain.mapped(&span.leg_left);
        let ok = is_path_embedding_chain(&span.left_cofree, &image);
        if !ok {
            println!("chain len {} fails mapped-chain check", chain.len());
            for (i, n) in chain.nodes.iter().enumerate() {
                println!("  node {i}: {n}");
            }
            for (i, n) in image.nodes.iter().enumerate() {
                println!("  image {i}: {n}");
            }
            // diagnose which condition fails
            let nodes = &image.nodes;
            for (i, q) in nodes.iter().enumerate() {
                if q.len() != i + 1 { println!("  len mismatch at {i}"); }
                for &x in q.last() {
                    let c = canonicalize(&FocussedPlay::new(q.clone(), x));
                    if c != span.left_cofree.gamma[x as usize] {
                        println!("  class mismatch at node {i} elem {x}: canon={c} gamma={}", span.left_cofree.gamma[x as usize]);
                    }
                }
                let intro = q.last().iter().any(|&x| span.left_cofree.gamma[x as usize].play() == q);
                if !intro { println!("  no introduced element at node {i}"); }
            }
            break;
        }
    }
}
