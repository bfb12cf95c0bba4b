"""
Report Generator Module
Writes score tables as tab-separated text, PDF and Excel
"""

from datetime import datetime

import openpyxl
import pandas as pd
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter
from reportlab.lib import colors
from reportlab.lib.enums import TA_CENTER
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

FLOAT_FORMAT = "%.6f"


def metric_table(summary):
    """Two-column (metric, value) table from an ordered metric dict."""
    return pd.DataFrame({"metric": list(summary.keys()), "value": list(summary.values())})


def write_score_table(table, output_path):
    """
    Write a score table as delimited text

    Args:
        table: DataFrame, one row per metric or per variant
        output_path: Path to save the .tsv file

    Returns:
        Path to the written file
    """
    table.to_csv(output_path, sep="\t", index=False, float_format=FLOAT_FORMAT)
    return output_path


def _cell(value):
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def create_pdf_report(table, output_path, title):
    """
    Create a PDF report holding one score table

    Args:
        table: DataFrame to render
        output_path: Path to save PDF
        title: Heading printed above the table

    Returns:
        Path to generated PDF
    """
    doc = SimpleDocTemplate(output_path, pagesize=A4,
                            rightMargin=48, leftMargin=48, topMargin=72, bottomMargin=72)
    styles = getSampleStyleSheet()
    title_style = ParagraphStyle(
        'ReportTitle',
        parent=styles['Heading1'],
        fontSize=18,
        textColor=colors.HexColor('#6366f1'),
        spaceAfter=20,
        alignment=TA_CENTER
    )

    story = [
        Paragraph(title, title_style),
        Paragraph(f"<b>Generated:</b> {datetime.now().strftime('%B %d, %Y at %H:%M')}", styles['Normal']),
        Spacer(1, 16),
    ]

    rows = [list(table.columns)] + [[_cell(v) for v in row] for row in table.itertuples(index=False)]
    pdf_table = Table(rows, repeatRows=1)
    pdf_table.setStyle(TableStyle([
        ('BACKGROUND', (0, 0), (-1, 0), colors.HexColor('#6366f1')),
        ('TEXTCOLOR', (0, 0), (-1, 0), colors.white),
        ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
        ('FONTNAME', (0, 1), (-1, -1), 'Helvetica'),
        ('FONTSIZE', (0, 0), (-1, -1), 9),
        ('ALIGN', (1, 1), (-1, -1), 'RIGHT'),
        ('GRID', (0, 0), (-1, -1), 1, colors.HexColor('#e5e7eb')),
        ('BOTTOMPADDING', (0, 0), (-1, -1), 6),
        ('TOPPADDING', (0, 0), (-1, -1), 6),
    ]))
    story.append(pdf_table)
    doc.build(story)
    return output_path


def create_excel_report(table, output_path, title):
    """
    Generate an Excel workbook with the score table on one sheet

    Returns:
        Path to generated Excel file
    """
    wb = openpyxl.Workbook()
    ws = wb.active
    ws.title = "Scores"

    header_fill = PatternFill(start_color="6366f1", end_color="6366f1", fill_type="solid")
    header_font = Font(bold=True, color="FFFFFF", size=12)
    thin_border = Border(left=Side(style='thin'), right=Side(style='thin'),
                         top=Side(style='thin'), bottom=Side(style='thin'))

    ws['A1'] = title
    ws['A1'].font = Font(bold=True, size=14)
    ws['A2'] = datetime.now().strftime("%B %d, %Y at %H:%M")

    # header on row 4, data below
    for col, header in enumerate(table.columns, 1):
        cell = ws.cell(row=4, column=col)
        cell.value = str(header)
        cell.font = header_font
        cell.fill = header_fill
        cell.alignment = Alignment(horizontal='center')
        cell.border = thin_border
        ws.column_dimensions[get_column_letter(col)].width = max(14, len(str(header)) + 4)

    for row_idx, row in enumerate(table.itertuples(index=False), 5):
        for col_idx, value in enumerate(row, 1):
            cell = ws.cell(row=row_idx, column=col_idx)
            cell.value = value.item() if hasattr(value, "item") else value
            cell.border = thin_border

    wb.save(output_path)
    return output_path
