# Generated by Django 5.0.2 on 2026-10-18 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(choices=[('nc', 'Non-crossing partitions'), ('algebra', 'Algebra context'), ('transform', 'Moment-cumulant transform'), ('canonical', 'Canonical model'), ('freeness', 'Freeness check'), ('bandmatrix', 'Band matrix')], max_length=20)),
                ('action', models.CharField(max_length=30)),
                ('parameters', models.JSONField(default=dict)),
                ('results', models.JSONField(default=dict)),
                ('seed', models.BigIntegerField(blank=True, null=True)),
                ('verdict', models.CharField(blank=True, max_length=20)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at'],
            },
        ),
    ]
