import sys
import os

# Add root to python path so hyperrole imports work
sys.path.append(os.getcwd())

from hyperrole.schemas.synth import PlantedRoleSpec
from hyperrole.services import synth, txgraph


def make_fixture(out_dir: str, n_transfers: int, seed: int):
    print(f"Generating planted-role fixture with {n_transfers} transfers (seed {seed})...")
    spec = PlantedRoleSpec(n_hubs=2, n_relays=4, n_traders=20, n_transfers=n_transfers, seed=seed)
    records, labels = synth.generate_planted_graph(spec)

    transactions = txgraph.write_records(os.path.join(out_dir, "planted_transactions.csv"), records)
    tags = synth.write_name_tags(os.path.join(out_dir, "planted_name_tags.csv"), labels)
    print(f"Wrote {len(records)} transfers to {transactions}")
    print(f"Wrote {len(labels)} name tags to {tags}")


if __name__ == "__main__":
    out_dir = sys.argv[1] if len(sys.argv) > 1 else "hyperrole/data"
    n_transfers = int(sys.argv[2]) if len(sys.argv) > 2 else 200
    make_fixture(out_dir, n_transfers, seed=0)
