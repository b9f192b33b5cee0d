use backup2center::*;
use backup2center::solver::{SearchState, psi1, SolverOptions, backup_2center_opts};
use backup2center::envelope::embed;
use backup2center::tree::VertexId;

fn int(n: i64) -> Rat { <Rat as Scalar>::from_i64(n) }
fn rat(n: i64, d: i64) -> Rat { <Rat as Scalar>::from_ratio(n, d) }

fn main() {
    // case 29
    let weights: Vec<Rat> = [5,2,7,1,6,1,5,6].iter().map(|&w| int(w)).collect();
    let edges: Vec<(usize,usize,Rat)> = vec![(0,1,int(4)),(1,2,int(2)),(0,3,int(4)),(1,4,int(1)),(0,5,int(3)),(2,6,int(3)),(4,7,int(5))];
    let t = WeightedTree::new(weights, edges).unwrap();
    let p = FailureProbs::symmetric(rat(1,10)).unwrap();

    // audit run
    let opts = SolverOptions { audit: true };
    match backup_2center_opts(&t, &p, &opts) {
        Ok(sol) => println!("audit run ok: value {}", sol.value),
        Err(e) => println!("AUDIT ERROR: {e}"),
    }

    // dump psi1 on a grid with full sets
    let c = weighted_center(&t);
    let tc = weighted_2center(&t);
    let bal = balance_2center(&t, &c, tc).unwrap();
    println!("c = {:?} r1 = {}", c.point, c.radius);
    println!("c1 = {:?}, c2 = {:?}, r2 = {}", bal.c1, bal.c2, bal.radius2);
    let emb = embed(&t, &bal.c1, &c.point, &bal.c2).unwrap();
    println!("xc = {} total = {}", emb.xc, emb.total);
    let demand: Vec<VertexId> = (0..t.n()).collect();
    let full = SearchState {
        u1: demand.clone(), u2: demand.clone(), u3: demand.clone(), u4: demand,
        l1: int(0), l2: emb.xc.clone(), l3: emb.xc.clone(), l4: emb.total.clone(), round: 0,
    };
    let mut work = 0u64;
    for i in 0..=24 {
        let x = emb.xc.clone() * rat(i, 24);
        let e = psi1(&t, &emb, &full, &DualValue::exact(x.clone()), &p, &mut work);
        println!("psi1({}) = {}  (partner {})", x, e.value.value, e.partner.value);
    }
}
