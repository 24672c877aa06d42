"""Completion providers: the deterministic mock, a scripted stub, and an
OpenAI-compatible HTTP client.

A provider turns (context, optional instruction) into completion text and
defines what a "token" is via its tokenizer. Providers must be safe to call
from several threads at once.
"""

from __future__ import annotations

import hashlib
import os
import random
import re
import threading
from typing import Optional, Protocol, Sequence, Union

import httpx

API_KEY_ENV = "WRITETRACE_API_KEY"
BASE_URL_ENV = "WRITETRACE_BASE_URL"
MODEL_ENV = "WRITETRACE_MODEL"

_TOKEN_RE = re.compile(r"\S+")


class ProviderError(Exception):
    """The provider could not produce a completion."""


class CompletionProvider(Protocol):
    def complete(
        self,
        context: str,
        instruction: Optional[str] = None,
        *,
        max_tokens: int,
        temperature: float = 1.0,
    ) -> str: ...

    def tokenize(self, text: str) -> list[str]: ...


def whitespace_tokenize(text: str) -> list[str]:
    """Tokens are maximal non-whitespace runs."""
    return _TOKEN_RE.findall(text)


_MOCK_VOCAB = (
    "alice rabbit garden river teacup lantern whisper marble story window "
    "evening violet thunder biscuit compass feather mirror harbor castle "
    "shadow ribbon clockwork meadow sparrow pebble wander glimmer curious "
    "quiet golden paper letter journey doorway branch memory winter velvet "
    "amber drifting certain small bright answer question wonder listen"
).split()


class MockProvider:
    """Deterministic stand-in for the language-model service.

    Output depends only on (seed, context, instruction), so identical requests
    yield identical text across runs and platforms. The requested max_tokens
    is deliberately ignored: generation length is drawn from `token_range`,
    which lets callers exercise their own truncation rules.
    """

    def __init__(
        self,
        seed: int = 0,
        vocabulary: Optional[Sequence[str]] = None,
        token_range: tuple[int, int] = (8, 90),
        newline_rate: float = 0.2,
        fail_rate: float = 0.0,
    ):
        self.seed = seed
        self.vocabulary = tuple(vocabulary) if vocabulary else _MOCK_VOCAB
        self.token_range = token_range
        self.newline_rate = newline_rate
        self.fail_rate = fail_rate

    def _rng(self, context: str, instruction: Optional[str]) -> random.Random:
        key = f"{self.seed}\x1f{instruction or ''}\x1f{context}".encode("utf-8")
        return random.Random(int.from_bytes(hashlib.sha256(key).digest()[:8], "big"))

    def complete(
        self,
        context: str,
        instruction: Optional[str] = None,
        *,
        max_tokens: int,
        temperature: float = 1.0,
    ) -> str:
        rng = self._rng(context, instruction)
        if rng.random() < self.fail_rate:
            raise ProviderError("mock provider scripted failure")
        n = rng.randint(*self.token_range)
        words = rng.choices(self.vocabulary, k=n)
        text = " ".join(words)
        if n > 2 and rng.random() < self.newline_rate:
            cut = rng.randint(1, n - 1)
            text = " ".join(words[:cut]) + "\n" + " ".join(words[cut:])
        return text

    def tokenize(self, text: str) -> list[str]:
        return whitespace_tokenize(text)


class ScriptedProvider:
    """Replays canned responses in order; an Exception entry is raised instead."""

    def __init__(self, responses: Sequence[Union[str, Exception]]):
        self._responses = list(responses)
        self._lock = threading.Lock()

    def complete(
        self,
        context: str,
        instruction: Optional[str] = None,
        *,
        max_tokens: int,
        temperature: float = 1.0,
    ) -> str:
        with self._lock:
            if not self._responses:
                raise ProviderError("scripted provider exhausted")
            item = self._responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return item

    def tokenize(self, text: str) -> list[str]:
        return whitespace_tokenize(text)


class HttpChatProvider:
    """OpenAI-compatible chat-completions client.

    The story prefix is sent as the user message; a fragment instruction, when
    present, rides along as the system message. Tokens are approximated by
    whitespace runs since the real model tokenizer is not available here.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: Optional[str] = None,
        *,
        timeout: float = 20.0,
        temperature: float = 1.0,
        client: Optional[httpx.Client] = None,
    ):
        self.model = model
        self.temperature = temperature
        api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = client or httpx.Client(
            base_url=base_url.rstrip("/"), timeout=timeout, headers=headers
        )

    @classmethod
    def from_env(cls, **kwargs) -> "HttpChatProvider":
        base_url = os.environ.get(BASE_URL_ENV)
        if not base_url:
            raise ProviderError(f"{BASE_URL_ENV} is not set")
        model = os.environ.get(MODEL_ENV, "gpt-3.5-turbo")
        return cls(base_url, model, **kwargs)

    def complete(
        self,
        context: str,
        instruction: Optional[str] = None,
        *,
        max_tokens: int,
        temperature: Optional[float] = None,
    ) -> str:
        messages = []
        if instruction:
            messages.append({"role": "system", "content": instruction})
        messages.append({"role": "user", "content": context})
        payload = {
            "model": self.model,
            "messages": messages,
            "max_tokens": max_tokens,
            "temperature": self.temperature if temperature is None else temperature,
        }
        try:
            response = self._client.post("/chat/completions", json=payload)
            response.raise_for_status()
            return response.json()["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderError(f"completion request failed: {exc}") from exc

    def tokenize(self, text: str) -> list[str]:
        return whitespace_tokenize(text)
