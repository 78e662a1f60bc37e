"""Удаленный LLM бэкенд стандартизации

Промпт строится из шаблона prompt_template.txt, запрос уходит по HTTP (httpx) с
ограничением частоты, повторами с экспоненциальной задержкой и учетом токенов. Ответ
разбирается через repair_json -> validate_note -> coerce_note. Все ошибки отдельной
заметки возвращаются в BackendOutcome.failure, исключения наружу не выходят.
"""
import asyncio
import json
import math
import random
import time
from collections import deque
from pathlib import Path
from typing import Any, Awaitable, Callable, Deque, Dict, List, Optional, Tuple

import httpx
from pydantic import BaseModel, Field, SecretStr

from notestd.core.config import DATA_DIR, BackendConfig
from notestd.core.models import (
    METRICS_KEYS,
    NOTE_SCHEMA_TREE,
    BackendOutcome,
    FailureKind,
    SourceNote,
    StandardizedNote,
    serialize_note,
)
from notestd.core.resources import StandardizationResources
from notestd.services.rules_engine import standardize_rule_based
from notestd.utils.defaults import (
    MAX_SECONDS_PER_NOTE,
    MIN_SECONDS_PER_NOTE,
    REFERENCE_NOTE_CHARS,
    REFERENCE_SECONDS_PER_NOTE,
)
from notestd.utils.exceptions import (
    CoercionFailedError,
    ConfigError,
    SchemaInvalidError,
    UnparseableResponseError,
    UnrepairableJSONError,
)
from notestd.utils.json_repair import repair_json
from notestd.utils.logger import log_backend_call, logger
from notestd.utils.templates import load_template
from notestd.utils.validation import coerce_note, validate_note

PROMPT_TEMPLATE_PATH = DATA_DIR / "prompt_template.txt"

# Оценка числа токенов без ответа провайдера: ~4 символа на токен
CHARS_PER_TOKEN = 4

RATE_WINDOW_SECONDS = 60.0

Sleep = Callable[[float], Awaitable[None]]


def estimate_tokens(text: str) -> int:
    return math.ceil(len(text) / CHARS_PER_TOKEN)


# ============================================
# Промпт
# ============================================

def schema_skeleton() -> Dict[str, Any]:
    """Выходная структура для промпта: листья "String", Metrics с типами значений"""

    def walk(tree: Dict[str, object]) -> Dict[str, Any]:
        return {key: walk(value) if isinstance(value, dict) else "String" for key, value in tree.items()}

    skeleton = walk(NOTE_SCHEMA_TREE)
    skeleton["Metrics"] = {key: "integer" if key == "Grammatical Errors" else ["String"] for key in METRICS_KEYS}
    return skeleton


def build_prompt(note: SourceNote, template_path: Path = PROMPT_TEMPLATE_PATH) -> str:
    """Промпт стандартизации: правила, контракт ответа со схемой и текст заметки в конце"""
    template = load_template(template_path)
    schema = json.dumps(schema_skeleton(), indent=3, ensure_ascii=False)
    return template.render(schema=schema, note_text=note.note_text)


# ============================================
# Форматы запроса и ответа провайдера
# ============================================

class WireFormat:
    """Отображение промпта в тело запроса и тела ответа в текст модели"""

    name = ""

    def build_request(self, prompt: str, config: BackendConfig) -> Dict[str, Any]:
        raise NotImplementedError

    def parse_body(self, body: Any) -> Tuple[str, Optional[int], Optional[int]]:
        """(текст, входные токены, выходные токены); KeyError/TypeError при чужой форме"""
        raise NotImplementedError

    def build_body(self, text: str, usage: Optional[Dict[str, int]] = None) -> Dict[str, Any]:
        """Тело ответа в этом формате (для MockBackend)"""
        raise NotImplementedError


class OpenAIChatFormat(WireFormat):
    name = "openai-chat"

    def build_request(self, prompt: str, config: BackendConfig) -> Dict[str, Any]:
        return {
            "model": config.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": config.temperature,
            "max_tokens": config.max_output_tokens,
        }

    def parse_body(self, body: Any) -> Tuple[str, Optional[int], Optional[int]]:
        text = body["choices"][0]["message"]["content"]
        if not isinstance(text, str):
            raise TypeError("content не строка")
        usage = body.get("usage") or {}
        return text, usage.get("prompt_tokens"), usage.get("completion_tokens")

    def build_body(self, text: str, usage: Optional[Dict[str, int]] = None) -> Dict[str, Any]:
        body: Dict[str, Any] = {"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}
        if usage:
            body["usage"] = usage
        return body


class SimpleJSONFormat(WireFormat):
    name = "simple-json"

    def build_request(self, prompt: str, config: BackendConfig) -> Dict[str, Any]:
        return {"prompt": prompt}

    def parse_body(self, body: Any) -> Tuple[str, Optional[int], Optional[int]]:
        text = body["text"]
        if not isinstance(text, str):
            raise TypeError("text не строка")
        return text, None, None

    def build_body(self, text: str, usage: Optional[Dict[str, int]] = None) -> Dict[str, Any]:
        return {"text": text}


WIRE_FORMATS: Dict[str, WireFormat] = {fmt.name: fmt for fmt in (OpenAIChatFormat(), SimpleJSONFormat())}


def get_wire_format(name: str) -> WireFormat:
    if name not in WIRE_FORMATS:
        raise ConfigError(f"Неизвестный формат запроса: {name}", details={"known": sorted(WIRE_FORMATS)})
    return WIRE_FORMATS[name]


# ============================================
# Ограничение частоты
# ============================================

class RateLimiter:
    """Скользящее окно: не больше requests_per_minute запросов за любые 60 секунд

    Часы и sleep подменяются в тестах виртуальным временем. Один объект на все
    параллельные запросы, доступ сериализован asyncio.Lock.
    """

    def __init__(
        self,
        requests_per_minute: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Sleep = asyncio.sleep,
    ):
        # Дробная часть лимита отбрасывается: 2.5 в минуту -> 2 за любые 60 с
        self.capacity = max(1, math.floor(requests_per_minute))
        # Лимит меньше 1 растягивает окно: 0.5 в минуту -> 1 за 120 с
        self.window = RATE_WINDOW_SECONDS if requests_per_minute >= 1 else RATE_WINDOW_SECONDS / requests_per_minute
        self._clock = clock
        self._sleep = sleep
        self._issued: Deque[float] = deque()
        self._lock = asyncio.Lock()

    async def acquire(self) -> None:
        async with self._lock:
            while True:
                now = self._clock()
                while self._issued and now - self._issued[0] >= self.window:
                    self._issued.popleft()
                if len(self._issued) < self.capacity:
                    self._issued.append(now)
                    return
                wait = self.window - (now - self._issued[0])
                logger.trace(f"Лимит частоты | Ожидание {wait:.2f}s")
                await self._sleep(wait)


# ============================================
# HTTP клиент
# ============================================

class Completion(BaseModel):
    """Итог запроса к модели: текст или вид отказа"""

    text: str = ""
    attempts: int = 0
    input_tokens: int = 0
    output_tokens: int = 0
    latency: float = 0.0
    failure: Optional[FailureKind] = None
    detail: str = ""


def _retry_after_seconds(response: httpx.Response) -> Optional[float]:
    value = response.headers.get("Retry-After")
    if value is None:
        return None
    try:
        return max(0.0, float(value))
    except ValueError:
        return None


class LLMClient:
    """Запросы к модели с повторами, лимитом частоты и подсчетом токенов"""

    def __init__(
        self,
        config: BackendConfig,
        api_key: Optional[SecretStr] = None,
        transport: Optional[httpx.AsyncBaseTransport] = None,
        rate_limiter: Optional[RateLimiter] = None,
        sleep: Sleep = asyncio.sleep,
        seed: Optional[int] = None,
    ):
        self.config = config
        self.wire = get_wire_format(config.wire_format)
        self._api_key = api_key
        self._client = httpx.AsyncClient(transport=transport, timeout=config.request_timeout)
        self.rate_limiter = rate_limiter or RateLimiter(config.requests_per_minute)
        self._sleep = sleep
        self._rng = random.Random(seed)

    def _headers(self, request_id: str) -> Dict[str, str]:
        headers = {"Content-Type": "application/json", "X-Request-ID": request_id}
        if self._api_key is not None:
            headers["Authorization"] = f"Bearer {self._api_key.get_secret_value()}"
        return headers

    def backoff_delay(self, attempt: int, retry_after: Optional[float] = None) -> float:
        """base * 2^attempt с разбросом +-25%; Retry-After - нижняя граница"""
        delay = self.config.backoff_base * (2 ** attempt) * self._rng.uniform(0.75, 1.25)
        if retry_after is not None:
            delay = max(delay, retry_after)
        return delay

    async def complete(self, prompt: str, request_id: str = "-") -> Completion:
        """Не больше 1 + max_retries попыток; повтор на 429, 5xx и сетевых ошибках"""
        body = self.wire.build_request(prompt, self.config)
        headers = self._headers(request_id)
        started = time.perf_counter()
        last_failure = FailureKind.TRANSPORT
        detail = ""
        attempts = 0

        for attempt in range(self.config.max_retries + 1):
            await self.rate_limiter.acquire()
            attempts += 1
            retry_after = None
            try:
                response = await self._client.post(self.config.endpoint_url, json=body, headers=headers)
            except httpx.TransportError as e:
                last_failure = FailureKind.TRANSPORT
                detail = f"{type(e).__name__}"
                logger.debug(f"LLM | Попытка {attempts} | Сетевая ошибка {detail}")
            else:
                status = response.status_code
                if status == 429:
                    last_failure = FailureKind.RATE_LIMITED
                    detail = "HTTP 429"
                    retry_after = _retry_after_seconds(response)
                elif status >= 500:
                    last_failure = FailureKind.TRANSPORT
                    detail = f"HTTP {status}"
                elif status >= 400:
                    # Ошибки запроса (ключ, модель) повтором не лечатся
                    return Completion(
                        attempts=attempts,
                        latency=time.perf_counter() - started,
                        failure=FailureKind.TRANSPORT,
                        detail=f"HTTP {status}",
                    )
                else:
                    return self._completion_from_response(response, prompt, attempts, started)
                logger.debug(f"LLM | Попытка {attempts} | {detail}")

            if attempt < self.config.max_retries:
                await self._sleep(self.backoff_delay(attempt, retry_after))

        return Completion(
            attempts=attempts,
            latency=time.perf_counter() - started,
            failure=last_failure,
            detail=detail,
        )

    def _completion_from_response(self, response: httpx.Response, prompt: str, attempts: int, started: float) -> Completion:
        latency = time.perf_counter() - started
        try:
            text, input_tokens, output_tokens = self.wire.parse_body(response.json())
        except (ValueError, KeyError, IndexError, TypeError, AttributeError) as e:
            return Completion(
                text=response.text,
                attempts=attempts,
                latency=latency,
                failure=FailureKind.UNPARSEABLE,
                detail=f"тело ответа не в формате {self.wire.name}: {type(e).__name__}",
            )
        return Completion(
            text=text,
            attempts=attempts,
            input_tokens=input_tokens if input_tokens is not None else estimate_tokens(prompt),
            output_tokens=output_tokens if output_tokens is not None else estimate_tokens(text),
            latency=latency,
        )

    async def submit(self, prompt: str, request_id: str = "-") -> BackendOutcome:
        """complete + parse_response; отказ любого этапа - BackendOutcome.failure"""
        completion = await self.complete(prompt, request_id=request_id)
        common = dict(
            raw_response=completion.text,
            attempts=completion.attempts,
            input_tokens=completion.input_tokens,
            output_tokens=completion.output_tokens,
            latency=completion.latency,
        )
        if completion.failure is not None:
            return BackendOutcome(failure=completion.failure, detail=completion.detail, **common)
        try:
            note = parse_response(completion.text)
        except UnparseableResponseError as e:
            return BackendOutcome(failure=FailureKind.UNPARSEABLE, detail=e.message, **common)
        except SchemaInvalidError as e:
            detail = "; ".join(f"{v.kind.value} {v.path}" for v in e.report.violations)
            return BackendOutcome(failure=FailureKind.SCHEMA_INVALID, detail=detail, **common)
        return BackendOutcome(note=note, **common)

    async def aclose(self) -> None:
        await self._client.aclose()


def parse_response(raw: str) -> StandardizedNote:
    """Текст модели -> StandardizedNote

    Raises:
        UnparseableResponseError: JSON объект не найден
        SchemaInvalidError: объект не приводится к схеме (несет ValidationReport)
    """
    try:
        candidate = repair_json(raw)
    except UnrepairableJSONError as e:
        raise UnparseableResponseError(details=e.details)
    try:
        return coerce_note(candidate)
    except CoercionFailedError:
        raise SchemaInvalidError(validate_note(candidate))


# ============================================
# Оценка стоимости и времени
# ============================================

class NoteEstimate(BaseModel):
    accession_num: str
    chars: int
    seconds: float
    input_tokens: int
    output_tokens: int
    cost: float


class CostEstimate(BaseModel):
    notes: int = 0
    total_cost: float = 0.0
    serial_time: float = 0.0
    parallel_time: float = 0.0
    parallelism: int = 1
    per_note: List[NoteEstimate] = Field(default_factory=list)


def estimate_note_seconds(chars: int) -> float:
    """20 с на заметку средней длины, пропорционально длине, в пределах [5, 120] с"""
    seconds = REFERENCE_SECONDS_PER_NOTE * chars / REFERENCE_NOTE_CHARS
    return min(MAX_SECONDS_PER_NOTE, max(MIN_SECONDS_PER_NOTE, seconds))


def _makespan(durations: List[float], workers: int) -> float:
    """Время при жадной раздаче заметок по порядку первому освободившемуся исполнителю"""
    if not durations:
        return 0.0
    finish = [0.0] * min(workers, len(durations))
    for duration in durations:
        index = finish.index(min(finish))
        finish[index] += duration
    return max(finish)


def estimate_cost(
    notes: List[SourceNote],
    config: BackendConfig,
    parallelism: int = 1,
    template_path: Path = PROMPT_TEMPLATE_PATH,
) -> CostEstimate:
    """Стоимость и время обработки корпуса удаленной моделью

    Входные токены - по длине промпта, выходные - по длине заметки плюс разметка схемы.
    Параллельное время не меньше ограничения частоты: n * 60 / requests_per_minute.
    """
    if not notes:
        return CostEstimate(parallelism=parallelism)

    template_chars = len(build_prompt(SourceNote(accession_num="-", note_text="-"), template_path)) - 1
    schema_tokens = estimate_tokens(json.dumps(schema_skeleton()))
    per_note: List[NoteEstimate] = []
    for note in notes:
        chars = len(note.note_text)
        input_tokens = math.ceil((template_chars + chars) / CHARS_PER_TOKEN)
        output_tokens = math.ceil(chars / CHARS_PER_TOKEN) + schema_tokens
        cost = input_tokens * config.cost_per_input_token + output_tokens * config.cost_per_output_token
        per_note.append(NoteEstimate(
            accession_num=note.accession_num,
            chars=chars,
            seconds=estimate_note_seconds(chars),
            input_tokens=input_tokens,
            output_tokens=output_tokens,
            cost=cost,
        ))

    durations = [estimate.seconds for estimate in per_note]
    rate_bound = len(notes) * RATE_WINDOW_SECONDS / config.requests_per_minute
    return CostEstimate(
        notes=len(notes),
        total_cost=sum(estimate.cost for estimate in per_note),
        serial_time=sum(durations),
        parallel_time=max(_makespan(durations, parallelism), rate_bound),
        parallelism=parallelism,
        per_note=per_note,
    )


# ============================================
# Бэкенды
# ============================================

class LLMBackend:
    """Стандартизация заметки удаленной моделью"""

    name = "llm"

    def __init__(self, client: LLMClient, template_path: Path = PROMPT_TEMPLATE_PATH, run_id: Optional[str] = None):
        self.client = client
        self.template_path = template_path
        self.run_id = run_id

    @classmethod
    def from_config(cls, config: BackendConfig, run_id: Optional[str] = None) -> "LLMBackend":
        """Бэкенд с ключом из окружения

        Raises:
            ConfigError: переменная окружения с ключом не задана
        """
        api_key = config.read_api_key()
        if api_key is None:
            raise ConfigError(
                f"Не задан API ключ: установите переменную окружения {config.api_key_env}",
                details={"env_var": config.api_key_env},
            )
        return cls(LLMClient(config, api_key=api_key), run_id=run_id)

    async def standardize(self, note: SourceNote) -> BackendOutcome:
        prompt = build_prompt(note, self.template_path)
        outcome = await self.client.submit(prompt, request_id=note.accession_num)
        log_backend_call(
            note.accession_num,
            success=outcome.failure is None,
            attempts=outcome.attempts,
            failure=outcome.failure.value if outcome.failure else None,
            input_tokens=outcome.input_tokens,
            output_tokens=outcome.output_tokens,
            duration_ms=outcome.latency * 1000,
            run_id=self.run_id,
        )
        return outcome

    async def aclose(self) -> None:
        await self.client.aclose()


MOCK_ENDPOINT = "http://mock.notestd.local/v1/chat/completions"


async def _no_sleep(_: float) -> None:
    return None


def load_transcripts(path: Path) -> Dict[str, List[Dict[str, Any]]]:
    """Сценарии ответов: {request_id: [{"status", "text" | "body", "headers", "usage", "error"}]}"""
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return data.get("transcripts", data)


class MockBackend(LLMBackend):
    """LLM бэкенд без сети: ответы из сценариев через httpx.MockTransport

    Шаг сценария - HTTP ответ ("status", "text" или готовое "body", "headers",
    "usage") либо сетевая ошибка ("error": "connect" | "timeout"). Исчерпанный
    сценарий повторяет последний шаг. Заметка без сценария получает ответ,
    синтезированный детерминированным бэкендом; прочие запросы без сценария - HTTP 404.
    """

    name = "mock"

    def __init__(
        self,
        transcripts: Dict[str, List[Dict[str, Any]]],
        resources: StandardizationResources,
        config: Optional[BackendConfig] = None,
        run_id: Optional[str] = None,
    ):
        config = config or BackendConfig(endpoint_url=MOCK_ENDPOINT, wire_format="openai-chat", requests_per_minute=1_000_000)
        self.transcripts = {key: list(steps) for key, steps in transcripts.items()}
        self.resources = resources
        self._positions: Dict[str, int] = {}
        self._notes: Dict[str, SourceNote] = {}
        self.requests: List[str] = []
        wire = get_wire_format(config.wire_format)
        self._wire = wire
        client = LLMClient(
            config,
            transport=httpx.MockTransport(self._handle),
            sleep=_no_sleep,
            rate_limiter=RateLimiter(config.requests_per_minute, sleep=_no_sleep),
            seed=0,
        )
        super().__init__(client, run_id=run_id)

    def _next_step(self, request_id: str) -> Optional[Dict[str, Any]]:
        steps = self.transcripts.get(request_id)
        if not steps:
            note = self._notes.get(request_id)
            if note is None:
                return None
            synthesized = json.dumps(serialize_note(standardize_rule_based(note, self.resources)), ensure_ascii=False)
            return {"status": 200, "text": synthesized}
        position = self._positions.get(request_id, 0)
        self._positions[request_id] = position + 1
        return steps[min(position, len(steps) - 1)]

    def _handle(self, request: httpx.Request) -> httpx.Response:
        request_id = request.headers.get("X-Request-ID", "-")
        self.requests.append(request_id)
        step = self._next_step(request_id)
        if step is None:
            return httpx.Response(404, json={"error": f"нет сценария для {request_id}"})
        error = step.get("error")
        if error == "timeout":
            raise httpx.ReadTimeout("mock timeout", request=request)
        if error:
            raise httpx.ConnectError("mock connect error", request=request)
        status = int(step.get("status", 200))
        headers = step.get("headers", {})
        if "body" in step:
            body = step["body"]
            if isinstance(body, str):
                return httpx.Response(status, text=body, headers=headers)
            return httpx.Response(status, json=body, headers=headers)
        if status >= 400:
            return httpx.Response(status, json={"error": step.get("text", "")}, headers=headers)
        return httpx.Response(status, json=self._wire.build_body(step.get("text", ""), step.get("usage")), headers=headers)

    async def standardize(self, note: SourceNote) -> BackendOutcome:
        self._notes[note.accession_num] = note
        return await super().standardize(note)
