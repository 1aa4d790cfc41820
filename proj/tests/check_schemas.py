#!/usr/bin/env python3
"""Checks that every JSON document the CLI emits validates against the shipped
schemas: fit -> model.schema.json, evaluate -> evaluation.schema.json,
simulate -> simulation-summary.schema.json. The schemas themselves are checked
for well-formedness first."""

import argparse
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def run(cli, args):
    proc = subprocess.run([cli] + args, capture_output=True, text=True)
    if proc.returncode != 0:
        sys.stderr.write(proc.stdout)
        sys.stderr.write(proc.stderr)
        raise SystemExit("command failed: " + " ".join(args))


def validate(schema_dir, schema_name, doc_path):
    schema = json.loads((schema_dir / schema_name).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    doc = json.loads(doc_path.read_text())
    jsonschema.Draft202012Validator(schema).validate(doc)
    print(f"ok: {doc_path.name} matches {schema_name}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--cli", required=True)
    ap.add_argument("--schemas", required=True, type=pathlib.Path)
    ap.add_argument("--toy", required=True, type=pathlib.Path)
    args = ap.parse_args()
    toy = args.toy

    with tempfile.TemporaryDirectory() as td:
        work = pathlib.Path(td)

        model = work / "model.json"
        run(args.cli, [
            "fit",
            "--survival", str(toy / "survival.csv"),
            "--covariates", str(toy / "covariates.csv"),
            "--expression", str(toy / "expression.csv"),
            "--s1", "100", "--s-max", "1600", "--thin", "2", "--burnin", "20",
            "--seed", "11", "--out", str(model),
        ])
        validate(args.schemas, "model.schema.json", model)

        preds = work / "pred.csv"
        run(args.cli, [
            "predict",
            "--model", str(model),
            "--covariates", str(toy / "covariates.csv"),
            "--expression", str(toy / "expression.csv"),
            "--out", str(preds),
        ])

        report = work / "eval.json"
        run(args.cli, [
            "evaluate",
            "--predictions", str(preds),
            "--survival", str(toy / "survival.csv"),
            "--out", str(report),
        ])
        validate(args.schemas, "evaluation.schema.json", report)

        sim = work / "sim"
        run(args.cli, [
            "simulate",
            "--model", "1", "--n", "40", "--p", "30",
            "--train-size", "30", "--test-size", "10",
            "--methods", "GPR:K,LMM:K", "--reps", "2", "--seed", "7",
            "--s1", "20", "--s-max", "80", "--thin", "1", "--burnin", "10",
            "--jobs", "1", "--out", str(sim),
        ])
        validate(args.schemas, "simulation-summary.schema.json",
                 sim / "summary.json")

    print("all emitted JSON documents validate")


if __name__ == "__main__":
    main()
