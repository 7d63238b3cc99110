"""HTTP service around one loaded bundle.

Endpoints (see docs/api.md): GET /health, GET /vocab, POST /compile,
POST /edit, POST /generate. The bundle is immutable shared state;
request handling is stateless. Malformed bodies are 400, domain
validation failures are 422 with a violations list.
"""

from __future__ import annotations

import base64
import io
from typing import Annotated, Literal, Optional, Union

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field
from PIL import Image as PILImage

from . import graph as G
from .bundle import Bundle, generate
from .caption import compile_report
from .errors import ScenegenError, ValidationFailed
from .metrics import object_count_fidelity, relation_accuracy


# --- wire schemas -----------------------------------------------------------

class BoxModel(BaseModel):
    x: int
    y: int
    w: int
    h: int


class EntityModel(BaseModel):
    id: int
    category: str


class TripletModel(BaseModel):
    subject_id: int
    relation: str
    object_id: int
    subject_box: BoxModel
    object_box: BoxModel


class CanvasModel(BaseModel):
    width: int
    height: int


class GraphModel(BaseModel):
    canvas: CanvasModel
    entities: list[EntityModel]
    triplets: list[TripletModel]


class AddObjectModel(BaseModel):
    kind: Literal["AddObject"]
    entity: EntityModel
    box: BoxModel


class AddRelationModel(BaseModel):
    kind: Literal["AddRelation"]
    triplet: TripletModel


class ReplaceObjectModel(BaseModel):
    kind: Literal["ReplaceObject"]
    target_id: int
    category: str


class DeleteObjectModel(BaseModel):
    kind: Literal["DeleteObject"]
    target_id: int


EditOpModel = Annotated[
    Union[AddObjectModel, AddRelationModel, ReplaceObjectModel, DeleteObjectModel],
    Field(discriminator="kind"),
]


class HealthResponse(BaseModel):
    status: str


class CompileRequest(BaseModel):
    graph: GraphModel
    budget: Optional[int] = None  # defaults to the bundle's budget


class PhraseModel(BaseModel):
    text: str
    salience: int
    kept: bool


class CompileResponse(BaseModel):
    caption: str
    token_count: int
    phrases: list[PhraseModel]


class EditRequest(BaseModel):
    graph: GraphModel
    ops: list[EditOpModel]


class EditResponse(BaseModel):
    graph: GraphModel


class GenerateRequest(BaseModel):
    graph: GraphModel
    seed: int = 0
    temperature: Optional[float] = None
    top_k: Optional[int] = None


class GenerateResponse(BaseModel):
    image_png_base64: str
    caption: str
    relation_accuracy: Optional[float]
    object_count_fidelity: Optional[float]


class VocabResponse(BaseModel):
    categories: list[str]
    relations: list[str]


# --- conversions ----------------------------------------------------------------

def _to_box(m: BoxModel) -> G.BoundingBox:
    return G.BoundingBox(x=m.x, y=m.y, w=m.w, h=m.h)


def _to_graph(m: GraphModel) -> G.SceneGraph:
    return G.SceneGraph(
        entities=tuple(G.Entity(id=e.id, category=e.category) for e in m.entities),
        triplets=tuple(G.Triplet(
            subject_id=t.subject_id, relation=t.relation, object_id=t.object_id,
            subject_box=_to_box(t.subject_box), object_box=_to_box(t.object_box),
        ) for t in m.triplets),
        canvas=(m.canvas.width, m.canvas.height),
    )


def _from_graph(g: G.SceneGraph) -> GraphModel:
    return GraphModel(
        canvas=CanvasModel(width=g.canvas[0], height=g.canvas[1]),
        entities=[EntityModel(id=e.id, category=e.category) for e in g.entities],
        triplets=[TripletModel(
            subject_id=t.subject_id, relation=t.relation, object_id=t.object_id,
            subject_box=BoxModel(x=t.subject_box.x, y=t.subject_box.y,
                                 w=t.subject_box.w, h=t.subject_box.h),
            object_box=BoxModel(x=t.object_box.x, y=t.object_box.y,
                                w=t.object_box.w, h=t.object_box.h),
        ) for t in g.triplets],
    )


def _to_edit_op(m) -> G.EditOp:
    if isinstance(m, AddObjectModel):
        return G.AddObject(entity=G.Entity(id=m.entity.id, category=m.entity.category),
                           box=_to_box(m.box))
    if isinstance(m, AddRelationModel):
        t = m.triplet
        return G.AddRelation(triplet=G.Triplet(
            subject_id=t.subject_id, relation=t.relation, object_id=t.object_id,
            subject_box=_to_box(t.subject_box), object_box=_to_box(t.object_box)))
    if isinstance(m, ReplaceObjectModel):
        return G.ReplaceObject(target_id=m.target_id, category=m.category)
    return G.DeleteObject(target_id=m.target_id)


def _png_base64(image: np.ndarray) -> str:
    data = np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8)
    buf = io.BytesIO()
    PILImage.fromarray(data, mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


class _Invalid(Exception):
    def __init__(self, violations: list[str]):
        self.violations = violations


def _validated_graph(model: GraphModel) -> G.SceneGraph:
    g = _to_graph(model)
    violations = G.validate(g)
    if violations:
        raise _Invalid(violations)
    return g


# --- app ---------------------------------------------------------------------------

def create_app(bundle: Bundle, static_dir: Optional[str] = None) -> FastAPI:
    bundle.check()
    app = FastAPI(title="scenegen service", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.exception_handler(_Invalid)
    async def invalid_graph(request: Request, exc: _Invalid):
        return JSONResponse(status_code=422, content={"violations": exc.violations})

    @app.exception_handler(ScenegenError)
    async def domain_error(request: Request, exc: ScenegenError):
        if isinstance(exc, ValidationFailed):
            return JSONResponse(status_code=422, content={"violations": exc.violations})
        return JSONResponse(status_code=422, content={"violations": [str(exc)]})

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok")

    @app.get("/vocab", response_model=VocabResponse)
    def vocab():
        return VocabResponse(categories=list(bundle.spec.categories),
                             relations=list(bundle.spec.relations))

    @app.post("/compile", response_model=CompileResponse)
    def compile_endpoint(req: CompileRequest):
        g = _validated_graph(req.graph)
        budget = req.budget if req.budget is not None else bundle.budget
        caption, table = compile_report(g, budget)
        return CompileResponse(
            caption=caption.rendered,
            token_count=caption.token_count,
            phrases=[PhraseModel(text=p.text, salience=p.salience, kept=kept)
                     for p, kept in table],
        )

    @app.post("/edit", response_model=EditResponse)
    def edit_endpoint(req: EditRequest):
        g = _validated_graph(req.graph)
        for op_model in req.ops:
            g = G.apply_edit(g, _to_edit_op(op_model))
        return EditResponse(graph=_from_graph(g))

    @app.post("/generate", response_model=GenerateResponse)
    def generate_endpoint(req: GenerateRequest):
        g = _validated_graph(req.graph)
        result = generate(g, bundle, seed=req.seed,
                          temperature=req.temperature, top_k=req.top_k)
        return GenerateResponse(
            image_png_base64=_png_base64(result.image),
            caption=result.caption.rendered,
            relation_accuracy=relation_accuracy(g, result.image, bundle.spec),
            object_count_fidelity=object_count_fidelity(g, result.image, bundle.spec),
        )

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
