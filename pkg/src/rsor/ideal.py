"""Executable ideal functionality for repliable service onion routing.

Onions here are abstract records, not bytes: the functionality tracks who
sent what to whom along which paths, hands the adversary exactly the leaks
the model grants it (per-segment tids, corrupted-sender disclosures, exit
leaks), and notifies parties of deliveries.  Honest-segment traversal is
adversary-scheduled via temporary ids that are re-randomized at every
honest relay, which is precisely what makes hops unlinkable in this model.

The adversary role is called S and the environment role Z; both drive the
same instance through the message methods below.  All events are appended
to adv_events (visible to S) and env_events (visible to Z / the parties).
"""

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class AbstractOnion:
    """One onion as the ideal world sees it.

    For replies, sender is the exit relay that created the reply onion,
    receiver is the original sender awaiting it, path is the reply path,
    and reply_path is empty.
    """

    sid: str
    sender: bytes
    receiver: bytes
    message: bytes
    path: tuple       # relay names, positions 1..n; position 0 is sender
    reply_path: tuple
    pos: int
    direction: str    # "f" forward, "b" backward (reply)

    def at(self, pos):
        return dataclasses.replace(self, pos=pos)

    def hop(self, i):
        """Party at position i: the origin for 0, else path[i-1]."""
        return self.sender if i == 0 else self.path[i - 1]


class RsorIdeal:
    """The ideal functionality's state machine (static corruption)."""

    def __init__(self, bad, rng, max_hops=5):
        self.bad = set(bad)
        self.max_hops = max_hops
        self._rng = rng
        self.l_o = {}        # tid -> (AbstractOnion, next honest index)
        self.buffers = {}    # (relay, tid') -> AbstractOnion
        self.reply_buffers = {}  # (relay, tid') -> (message, back tid)
        self.l_tag = set()   # tagged onions, keyed by (sid, direction)
        self.back = {}       # tid -> (sender, path, reply_path, origin, sid)
        self.id_fwd = {}     # reply sid -> forward sid
        self.rep = {}        # (exit relay, rid) -> tid
        self.adv_events = []
        self.env_events = []

    # -- event plumbing ----------------------------------------------------

    def _fresh(self, prefix):
        return prefix + "-" + self._rng.read(8).hex()

    def _to_adv(self, kind, **fields):
        event = {"kind": kind}
        event.update(fields)
        self.adv_events.append(event)

    def _to_env(self, actor, kind, **fields):
        event = {"actor": actor.decode("ascii", "replace"), "kind": kind}
        event.update(fields)
        self.env_events.append(event)

    def _tagged(self, onion):
        return (onion.sid, onion.direction) in self.l_tag

    # -- messages from the environment / adversary -------------------------

    def process_new_onion(self, sender, receiver, message, path, reply_path):
        """A sender hands in a fresh onion description."""
        if len(path) > self.max_hops or len(reply_path) > self.max_hops:
            return False
        sid = self._fresh("sid")
        onion = AbstractOnion(
            sid=sid,
            sender=sender,
            receiver=receiver,
            message=message,
            path=tuple(path),
            reply_path=tuple(reply_path),
            pos=0,
            direction="f",
        )
        self._out_cor_sender(onion, "start")
        self._proc_next_step(onion)
        return True

    def process_new_reply(self, message, tid):
        """Turn a stored Back entry into a travelling reply onion."""
        entry = self.back.pop(tid, None)  # Back entries are single-use
        if entry is None:
            return False
        orig_sender, path, reply_path, origin, sid_fwd = entry
        sid = self._fresh("sid")
        self.id_fwd[sid] = sid_fwd
        onion = AbstractOnion(
            sid=sid,
            sender=origin,
            receiver=orig_sender,
            message=message,
            path=tuple(reply_path),
            reply_path=(),
            pos=0,
            direction="b",
        )
        self._out_cor_sender(onion, "start", fwd_path=path)
        self._proc_next_step(onion)
        return True

    def deliver_onion(self, tid):
        """S releases a travelling onion to its next honest position."""
        entry = self.l_o.pop(tid, None)
        if entry is None:
            return
        onion, j = entry
        onion = onion.at(j)
        if onion.direction == "b" and j == len(onion.path):
            # Arrived back at the reply receiver: deliver quietly, and only
            # if the payload was never tagged in transit.
            if onion.message is not None and not self._tagged(onion):
                self._to_env(onion.receiver, "got-reply",
                             message=_text(onion.message))
            return
        tid_new = self._fresh("tid")
        self._to_env(onion.hop(j), "onion-received", tid=tid_new,
                     via=_text(onion.hop(j - 1)))
        self.buffers[(onion.hop(j), tid_new)] = onion

    def forward_onion(self, party, tid):
        """Z or S (via a relay) flushes one buffered temporary id."""
        onion = self.buffers.pop((party, tid), None)
        if onion is not None:
            self._proc_next_step(onion)
            return
        reply = self.reply_buffers.pop((party, tid), None)
        if reply is not None:
            message, back_tid = reply
            self.process_new_reply(message, back_tid)

    def tag(self, tid):
        """S marks a travelling onion's payload as destroyed."""
        entry = self.l_o.get(tid)
        if entry is not None:
            onion, _j = entry
            self.l_tag.add((onion.sid, onion.direction))

    def deliver_message(self, relay, message, rid, receiver):
        """S forwards an exit delivery over the plaintext edge link."""
        fields = {"message": _text(message), "from": _text(relay)}
        if rid is not None:
            fields["rid"] = rid
        self._to_env(receiver, "message-received",
                     repliable=rid is not None, **fields)

    def initiate_reply(self, receiver, relay, message, rid):
        """A receiver answers (m, rid) toward the exit relay it saw."""
        self._to_adv("initiate-reply", receiver=_text(receiver),
                     relay=_text(relay), message=_text(message), rid=rid)

    def deliver_reply(self, receiver, relay, message, rid):
        """S forwards the receiver's (m, rid) pair to the exit relay."""
        self._to_env(relay, "reply-received", rid=rid, sender_of=_text(receiver))
        tid = self.rep.pop((relay, rid), None)  # rids are single-use
        if tid is None:
            return
        tid_new = self._fresh("tid")
        self.reply_buffers[(relay, tid_new)] = (message, tid)
        self._to_env(relay, "reply-onion-ready", tid=tid_new)

    def bypass_reply(self, relay, message, tid):
        """S answers a Back-registered tid directly from a corrupted relay."""
        if tid in self.back:
            self.process_new_reply(message, tid)

    # -- internal procedures ----------------------------------------------

    def _out_cor_sender(self, onion, tid, fwd_path=None):
        """Full disclosure to S when the responsible endpoint is corrupted.

        Forward onions disclose on a corrupted sender; reply onions on a
        corrupted reply receiver (the original sender, who built the reply
        header and therefore knows everything about it in the real world).
        """
        if onion.direction == "f" and onion.sender in self.bad:
            self._to_adv(
                "sender-leak", tid=tid, sid=onion.sid,
                sender=_text(onion.sender), receiver=_text(onion.receiver),
                message=_text(onion.message), n=len(onion.path),
                path=_names(onion.path),
                reply_path=_names(onion.reply_path), direction="f",
            )
        elif onion.direction == "b" and onion.receiver in self.bad:
            self._to_adv(
                "sender-leak", tid=tid, sid=onion.sid,
                sender=_text(onion.sender), receiver=_text(onion.receiver),
                message=_text(onion.message),
                path=_names(fwd_path if fwd_path is not None else onion.path),
                reply_path=_names(onion.path), direction="b",
                replying_to=self.id_fwd.get(onion.sid),
            )

    def _proc_to_relay(self, onion):
        i = onion.pos
        j = next(
            k
            for k in range(i + 1, len(onion.path) + 1)
            if onion.hop(k) not in self.bad
        )
        tid = self._fresh("tid")
        self._to_adv(
            "segment", tid=tid, frm=_text(onion.hop(i)), to=_text(onion.hop(j)),
            via=_names(onion.path[i : j - 1]),
        )
        self._to_env(onion.hop(i), "forwarded", to=_text(onion.hop(i + 1)))
        self._out_cor_sender(onion, tid)
        if onion.direction == "b" and i == 0:
            self._to_adv("tid-sid", tid=tid, sid=onion.sid)
        self.l_o[tid] = (onion, j)

    def _setup_reply(self, onion, rid):
        tid = self._fresh("tid")
        self.back[tid] = (
            onion.sender,
            onion.path,
            onion.reply_path,
            onion.hop(onion.pos),
            onion.sid,
        )
        if onion.pos == len(onion.path):
            self.rep[(onion.hop(onion.pos), rid)] = tid
            self._to_adv("reply-setup", rid=rid)
        else:
            prefix = []
            for name in onion.reply_path:
                prefix.append(name)
                if name not in self.bad:
                    break
            self._to_adv("reply-setup", tid=tid, reply_prefix=_names(prefix))

    def _leak_message(self, onion):
        if onion.message is None:
            return
        self._out_cor_sender(onion, "end")
        if onion.reply_path:
            rid = self._fresh("rid")
            self._setup_reply(onion, rid)
        if onion.pos == len(onion.path):
            self._to_env(onion.hop(onion.pos), "message-delivered",
                         receiver=_text(onion.receiver))
        else:
            self._to_env(onion.hop(onion.pos), "forwarded",
                         to=_text(onion.hop(onion.pos + 1)))
        self._to_adv(
            "message-leak", frm=_text(onion.hop(onion.pos)),
            message=_text(onion.message), receiver=_text(onion.receiver),
            via=_names(onion.path[onion.pos :]),
        )

    def _leak_reply(self, onion):
        tid = self._fresh("tid")
        self._to_adv(
            "reply-leak", tid=tid, frm=_text(onion.hop(onion.pos)),
            message=_text(onion.message), receiver=_text(onion.receiver),
            via=_names(onion.path[onion.pos : len(onion.path) - 1]),
        )
        self._to_env(onion.hop(onion.pos), "forwarded",
                     to=_text(onion.hop(onion.pos + 1)))
        self._out_cor_sender(onion, tid)

    def _proc_next_step(self, onion):
        i, n = onion.pos, len(onion.path)
        rest_bad = all(onion.hop(j) in self.bad for j in range(i + 1, n + 1))
        if not (rest_bad or i == n):
            self._proc_to_relay(onion)
            return
        if self._tagged(onion):
            self._out_cor_sender(onion, "tagged")
            if i < n:
                self._to_adv("tagged-to-corrupt", frm=_text(onion.hop(i)),
                             via=_names(onion.path[i:]))
                self._to_env(onion.hop(i), "forwarded",
                             to=_text(onion.hop(i + 1)))
            else:
                self._to_env(onion.hop(i), "dropped", reason="integrity")
        elif onion.direction == "f":
            self._leak_message(onion)
        else:
            self._leak_reply(onion)


def _text(value):
    if isinstance(value, bytes):
        return value.decode("ascii", "replace")
    return value


def _names(path):
    return [_text(name) for name in path]
