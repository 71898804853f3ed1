#!/usr/bin/env python3
"""Pretrained text-to-text backbone for `pnc --backbone external`.

Reads one JSON request per line on stdin and answers with one JSON line on
stdout. Needs torch and transformers; the model name defaults to t5-large.
The classification head is a linear layer over the mean encoder state.
"""

import json
import os
import sys

import torch
from transformers import AutoTokenizer, T5ForConditionalGeneration

LABELS = {"cmp": 0, "non-cmp": 1}


class Server:
    def __init__(self, model, seed, load):
        torch.manual_seed(seed)
        name = load or model or "t5-large"
        self.name = model or name
        self.tok = AutoTokenizer.from_pretrained(name)
        self.model = T5ForConditionalGeneration.from_pretrained(name)
        self.head = torch.nn.Linear(self.model.config.d_model, 2)
        if load and os.path.exists(os.path.join(load, "head.pt")):
            self.head.load_state_dict(torch.load(os.path.join(load, "head.pt")))
        self.opt = None
        self.lr = None

    def info(self):
        return {
            "id": f"t5:{self.name}",
            "mask_token": "<extra_id_0>",
            "context_limit": self.tok.model_max_length,
        }

    def _enc(self, texts):
        return self.tok(texts, return_tensors="pt", padding=True, truncation=True)

    def _pooled(self, batch):
        out = self.model.encoder(input_ids=batch.input_ids, attention_mask=batch.attention_mask)
        mask = batch.attention_mask.unsqueeze(-1).float()
        return (out.last_hidden_state * mask).sum(1) / mask.sum(1).clamp(min=1)

    @torch.no_grad()
    def encode(self, text):
        self.model.eval()
        b = self._enc([text])
        h = self.model.encoder(input_ids=b.input_ids, attention_mask=b.attention_mask).last_hidden_state
        return {"hidden": h[0].tolist()}

    @torch.no_grad()
    def generate(self, text):
        self.model.eval()
        b = self._enc([text])
        ids = self.model.generate(**b, max_new_tokens=64, num_beams=1, do_sample=False)
        return {"text": self.tok.decode(ids[0], skip_special_tokens=False).replace("<pad>", "").strip()}

    @torch.no_grad()
    def classify(self, text):
        self.model.eval()
        return {"logits": self.head(self._pooled(self._enc([text])))[0].tolist()}

    def train_step(self, batch, options):
        lr = options["learning_rate"]
        if self.opt is None or lr != self.lr:
            params = list(self.model.parameters()) + list(self.head.parameters())
            self.opt = torch.optim.AdamW(params, lr=lr)
            self.lr = lr
        self.model.train()
        self.opt.zero_grad()
        gen = torch.zeros(())
        cls = torch.zeros(())
        gen_items = [i for i in batch if i.get("target") is not None]
        if gen_items:
            enc = self._enc([i["input"] for i in gen_items])
            labels = self._enc([i["target"] for i in gen_items]).input_ids
            labels[labels == self.tok.pad_token_id] = -100
            gen = self.model(input_ids=enc.input_ids, attention_mask=enc.attention_mask, labels=labels).loss
        cls_items = [i for i in batch if i.get("label") is not None]
        if cls_items:
            logits = self.head(self._pooled(self._enc([i["input"] for i in cls_items])))
            y = torch.tensor([LABELS[i["label"]] for i in cls_items])
            cls = torch.nn.functional.cross_entropy(logits, y)
        total = options["generation_weight"] * gen + options["classification_weight"] * cls
        total.backward()
        self.opt.step()
        return {"total": float(total), "generation": float(gen), "classification": float(cls)}

    def save(self, path):
        self.model.save_pretrained(path)
        self.tok.save_pretrained(path)
        torch.save(self.head.state_dict(), os.path.join(path, "head.pt"))
        return {}


def main():
    server = None
    for line in sys.stdin:
        try:
            r = json.loads(line)
            op = r.get("op")
            if op == "init":
                server = Server(r.get("model"), r.get("seed") or 0, r.get("load"))
                out = server.info()
            elif server is None:
                out = {"error": "init must come first"}
            elif op == "encode":
                out = server.encode(r["text"])
            elif op == "generate":
                out = server.generate(r["text"])
            elif op == "classify":
                out = server.classify(r["text"])
            elif op == "train_step":
                out = server.train_step(r["batch"], r["options"])
            elif op == "save":
                out = server.save(r["dir"])
            else:
                out = {"error": f"unknown op {op!r}"}
        except Exception as e:  # reported to the caller, which decides
            out = {"error": f"{type(e).__name__}: {e}"}
        print(json.dumps(out), flush=True)


if __name__ == "__main__":
    main()
